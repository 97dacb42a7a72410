//! Command-level workflows behind the `scarloc` binary: solve, tb, stats and
//! diag. Each writes a run directory named after the config hash.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{label_states, CleanBaseline};
use crate::config::ExperimentConfig;
use crate::eigen::{read_energies_csv, state_file_name};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, Wavefunction};
use crate::observables::{diagnose_state, diagnostics_csv, read_diagnostics_csv, StateDiagnostics};
use crate::run::{execute, RunOutput};
use crate::schema::{self, fmt_f64, TableWriter};
use crate::spectral::{spectrum_stats, HistogramOptions, SpectrumStats, Window};
use crate::sweep::write_atomic;
use crate::tb::{estimate_tb_parameters, reduce_to_tb, spearman, tb_spectrum, TBModel, TBParameters, TBSpectrum};

pub const RUN_MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Subdirectory of the run directory.
    pub dir: String,
    pub seed: Option<u64>,
    pub n_states: usize,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub kind: String,
    pub config_hash: String,
    pub crate_version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub runs: Vec<RunRecord>,
    pub tb: Option<TBParameters>,
}

impl RunManifest {
    fn new(kind: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            format_version: RUN_MANIFEST_VERSION,
            kind: kind.into(),
            config_hash: cfg.hash(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            status: RunStatus::Running,
            error: None,
            wall_time_s: 0.0,
            runs: Vec::new(),
            tb: None,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if m.format_version != RUN_MANIFEST_VERSION {
            return Err(Error::format(
                path,
                format!("manifest version {} is not supported", m.format_version),
            ));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_string_pretty(self).expect("manifest serializes"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// A finished run with the same config hash already exists.
    UpToDate(PathBuf),
    Ran(PathBuf, RunManifest),
}

impl Outcome {
    pub fn dir(&self) -> &Path {
        match self {
            Outcome::UpToDate(d) | Outcome::Ran(d, _) => d,
        }
    }
}

/// Prepares `<out>/<kind>-<hash>`; `None` when it already holds a finished run.
fn prepare(cfg: &ExperimentConfig, out: &Path, kind: &str, force: bool) -> Result<Option<PathBuf>> {
    let dir = out.join(cfg.run_dir_name(kind));
    let manifest = dir.join(MANIFEST_FILE);
    if !force && manifest.exists() {
        let m = RunManifest::read(&manifest)?;
        if m.status == RunStatus::Done && m.config_hash == cfg.hash() {
            return Ok(None);
        }
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let cfg_path = dir.join("config.toml");
    write_atomic(&cfg_path, &cfg.canonical())?;
    Ok(Some(dir))
}

/// Runs the body, then records success or the error in the manifest.
fn finish(
    dir: PathBuf,
    mut manifest: RunManifest,
    t0: Instant,
    body: impl FnOnce(&mut RunManifest) -> Result<()>,
) -> Result<Outcome> {
    let path = dir.join(MANIFEST_FILE);
    manifest.write(&path)?;
    let result = body(&mut manifest);
    manifest.wall_time_s = t0.elapsed().as_secs_f64();
    match result {
        Ok(()) => {
            manifest.status = RunStatus::Done;
            manifest.write(&path)?;
            Ok(Outcome::Ran(dir, manifest))
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            manifest.write(&path)?;
            Err(e)
        }
    }
}

fn record(dir: &str, seed: Option<u64>, energies: &[f64]) -> RunRecord {
    RunRecord {
        dir: dir.into(),
        seed,
        n_states: energies.len(),
        e_min: energies.first().copied(),
        e_max: energies.last().copied(),
    }
}

/// Solves the configured lattice. Disordered runs also solve the clean lattice
/// of the same size, which provides the `⟨T⟩/⟨V⟩` baseline for the labels.
pub fn solve(cfg: &ExperimentConfig, out: &Path, force: bool) -> Result<Outcome> {
    cfg.validate()?;
    let t0 = Instant::now();
    let Some(dir) = prepare(cfg, out, "solve", force)? else {
        return Ok(Outcome::UpToDate(out.join(cfg.run_dir_name("solve"))));
    };
    let l = cfg.potential.wells;
    let n = cfg.solver.n_states;
    let th = &cfg.analysis.classify;
    let side = cfg.fermi(l).side_length();
    let root = dir.clone();
    finish(dir, RunManifest::new("solve", cfg), t0, |m| {
        let mut clean = execute(&cfg.run_spec(l, 0.0, 0, n))?;
        let baseline = CleanBaseline::from_diagnostics(&clean.diagnostics, th.baseline_bins, th.baseline_percentile)?;
        label_states(&mut clean.diagnostics, &baseline, th, side)?;
        save_run(&root, "clean", &clean, cfg)?;
        m.runs.push(record("clean", None, &clean.set.energies));
        m.write(&root.join(MANIFEST_FILE))?;
        let spec_disordered = cfg.run_spec(l, cfg.disorder.strength, 0, n).disorder.is_some();
        if spec_disordered {
            for &seed in &cfg.disorder.seeds {
                let mut run = execute(&cfg.run_spec(l, cfg.disorder.strength, seed, n))?;
                label_states(&mut run.diagnostics, &baseline, th, side)?;
                let name = format!("seed{seed}");
                save_run(&root, &name, &run, cfg)?;
                m.runs.push(record(&name, Some(seed), &run.set.energies));
                m.write(&root.join(MANIFEST_FILE))?;
            }
        }
        Ok(())
    })
}

fn save_run(root: &Path, name: &str, run: &RunOutput, cfg: &ExperimentConfig) -> Result<()> {
    run.save(&root.join(name), &cfg.solver.retain)
}

/// Result of a TB run with an optional continuum comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TbComparison {
    pub n_levels: usize,
    /// Rank correlation of consecutive level spacings in the lowest band.
    pub spacing_spearman: Option<f64>,
    pub table: String,
}

pub fn tb_parameters(cfg: &ExperimentConfig) -> Result<TBParameters> {
    match (cfg.tb.e0, cfg.tb.t) {
        (Some(e0), Some(t)) => Ok(TBParameters { e0, t }),
        (e0, t) => {
            let est = estimate_tb_parameters(&cfg.fermi(1), cfg.tb.points_per_cell, cfg.tb.tol)?;
            Ok(TBParameters {
                e0: e0.unwrap_or(est.e0),
                t: t.unwrap_or(est.t),
            })
        }
    }
}

/// TB model of the configured lattice for one seed (`None`: clean).
pub fn tb_model(cfg: &ExperimentConfig, params: TBParameters, seed: Option<u64>) -> Result<TBModel> {
    let l = cfg.potential.wells;
    match seed {
        None => TBModel::clean(l, params.e0, params.t),
        Some(seed) => {
            let spec = cfg.run_spec(l, cfg.disorder.strength, seed, cfg.solver.n_states);
            let real = spec.realization()?.ok_or(Error::Config(
                "disorder is off; TB seeds need `disorder.strength > 0`".into(),
            ))?;
            reduce_to_tb(&spec.fermi, &real, params.e0, params.t)
        }
    }
}

/// Lattice diagnostics (`model = tb`) of a TB spectrum.
pub fn tb_diagnostics(spec: &TBSpectrum) -> Vec<StateDiagnostics> {
    let e = &spec.energies;
    let (lo, hi) = (e[0], e[e.len() - 1]);
    spec.iprs()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let e_norm = if hi > lo { (e[i] - lo) / (hi - lo) } else { 0.0 };
            StateDiagnostics::lattice(i, e[i], e_norm, p)
        })
        .collect()
}

fn tb_energies_csv(energies: &[f64]) -> String {
    let mut w = TableWriter::new(&schema::ENERGIES);
    for (i, e) in energies.iter().enumerate() {
        w.row(&[i.to_string(), fmt_f64(*e), "0".to_string()]);
    }
    w.finish()
}

fn write_tb(dir: &Path, model: &TBModel, spec: &TBSpectrum, hist: &HistogramOptions) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let put = |name: &str, text: String| write_atomic(&dir.join(name), &text);
    put("onsite.csv", model.onsite_csv())?;
    put("energies.csv", tb_energies_csv(&spec.energies))?;
    put("diagnostics.csv", diagnostics_csv("tb", &tb_diagnostics(spec)))?;
    if spec.energies.len() >= 3 {
        put(
            "stats_summary.csv",
            spectrum_stats(&spec.energies, Window::All, hist)?.summary_csv(),
        )?;
    }
    Ok(())
}

/// Reduces the configured lattice to the Anderson model and exports its
/// spectrum, IPRs and statistics.
pub fn tb(cfg: &ExperimentConfig, out: &Path, force: bool) -> Result<Outcome> {
    cfg.validate()?;
    let t0 = Instant::now();
    let Some(dir) = prepare(cfg, out, "tb", force)? else {
        return Ok(Outcome::UpToDate(out.join(cfg.run_dir_name("tb"))));
    };
    let root = dir.clone();
    finish(dir, RunManifest::new("tb", cfg), t0, |m| {
        let params = tb_parameters(cfg)?;
        m.tb = Some(params);
        let disordered = cfg.run_spec(1, cfg.disorder.strength, 0, 1).disorder.is_some();
        let seeds: Vec<Option<u64>> = if disordered {
            cfg.disorder.seeds.iter().map(|&s| Some(s)).collect()
        } else {
            vec![None]
        };
        for seed in seeds {
            let model = tb_model(cfg, params, seed)?;
            let spec = tb_spectrum(&model)?;
            let name = seed.map_or("clean".to_string(), |s| format!("seed{s}"));
            write_tb(&root.join(&name), &model, &spec, &cfg.analysis.histogram)?;
            m.runs.push(record(&name, seed, &spec.energies));
        }
        Ok(())
    })
}

/// Energies from an `energies.csv`, a directory holding one, or a plain list
/// with one value per line (`#` starts a comment). Returned ascending.
pub fn load_levels(path: &Path) -> Result<Vec<f64>> {
    let file = if path.is_dir() {
        path.join("energies.csv")
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let mut levels: Vec<f64> = if text.starts_with("# scarloc:") {
        read_energies_csv(&file)?.into_iter().map(|(_, e, _)| e).collect()
    } else {
        text.lines()
            .map(|l| l.split('#').next().unwrap().trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|_| Error::format(&file, format!("not a number: `{l}`")))
            })
            .collect::<Result<_>>()?
    };
    if let Some(bad) = levels.iter().find(|e| !e.is_finite()) {
        return Err(Error::format(&file, format!("non-finite level {bad}")));
    }
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

/// Level statistics of a stored spectrum; writes the summary and histogram
/// tables when `out` is given.
pub fn stats(input: &Path, window: Window, hist: &HistogramOptions, out: Option<&Path>) -> Result<SpectrumStats> {
    let levels = load_levels(input)?;
    let st = spectrum_stats(&levels, window, hist)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("stats_summary.csv"), &st.summary_csv())?;
        write_atomic(&dir.join("histogram.csv"), &st.histogram.to_csv())?;
    }
    Ok(st)
}

/// Joins the lowest `L²` continuum levels with the TB spectrum.
pub fn compare_tb(continuum: &[f64], tb: &[f64]) -> Result<TbComparison> {
    let n = continuum.len().min(tb.len());
    if n == 0 {
        return Err(Error::Empty("levels to compare"));
    }
    let mut w = TableWriter::new(&schema::TB_COMPARE);
    for i in 0..n {
        w.row(&[i.to_string(), fmt_f64(continuum[i]), fmt_f64(tb[i])]);
    }
    let gaps = |e: &[f64]| e.windows(2).map(|p| p[1] - p[0]).collect::<Vec<f64>>();
    let spacing_spearman = if n >= 3 {
        Some(spearman(&gaps(&continuum[..n]), &gaps(&tb[..n]))?)
    } else {
        None
    };
    Ok(TbComparison {
        n_levels: n,
        spacing_spearman,
        table: w.finish(),
    })
}

/// Recomputes the diagnostics of every stored state in `run_dir` and writes
/// them to `diagnostics_recomputed.csv`. Labels use `clean/diagnostics.csv`
/// of the parent run when present.
pub fn diag(cfg: &ExperimentConfig, run_dir: &Path) -> Result<Vec<StateDiagnostics>> {
    let energies = read_energies_csv(&run_dir.join("energies.csv"))?;
    let v = ScalarField::read(&run_dir.join("potential.llf"))?;
    let (Some(first), Some(last)) = (energies.first(), energies.last()) else {
        return Err(Error::Empty("energies"));
    };
    let range = (first.1, last.1);
    let opts = cfg.analysis.diagnostics();
    let mut rows = Vec::new();
    for &(i, e, r) in &energies {
        let path = run_dir.join("states").join(state_file_name(i));
        if path.exists() {
            let psi = Wavefunction::read(&path)?;
            rows.push(diagnose_state(i, &psi, e, Some(r), &v, range, &opts)?);
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("stored states"));
    }
    let clean = run_dir.parent().map(|p| p.join("clean").join("diagnostics.csv"));
    if let Some(path) = clean.filter(|p| p.exists()) {
        let th = &cfg.analysis.classify;
        let baseline =
            CleanBaseline::from_diagnostics(&read_diagnostics_csv(&path)?, th.baseline_bins, th.baseline_percentile)?;
        label_states(&mut rows, &baseline, th, v.grid().side_length())?;
    }
    write_atomic(
        &run_dir.join("diagnostics_recomputed.csv"),
        &diagnostics_csv("continuum", &rows),
    )?;
    Ok(rows)
}
