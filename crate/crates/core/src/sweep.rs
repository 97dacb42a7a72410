//! Resumable parameter sweeps over `(L, ⟨A⟩/V0, seed)` and the aggregate
//! tables built from their per-cell outputs.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{fit_fractal_dimension, label_states, median, wavelength_gate, CleanBaseline, Label};
use crate::config::ExperimentConfig;
use crate::eigen::read_energies_csv;
use crate::error::{Error, Result};
use crate::observables::{read_diagnostics_csv, StateDiagnostics};
use crate::run::execute;
use crate::schema::{self, fmt_f64, fmt_opt, TableWriter};
use crate::spectral::{distribution_distance, empirical_pdf, pooled_symmetrized_mean, spacing_ratios, ReferenceKind};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub size: usize,
    /// `None` for the clean baseline of this size.
    pub strength: Option<f64>,
    pub seed: Option<u64>,
    /// Relative to the sweep directory.
    pub dir: String,
    pub status: CellStatus,
    pub error: Option<String>,
    pub wall_time_s: Option<f64>,
    pub n_states: Option<usize>,
}

impl CellRecord {
    fn baseline(size: usize) -> Self {
        Self::new(size, None, None, format!("cells/L{size}_clean"))
    }

    fn cell(size: usize, strength: f64, seed: u64) -> Self {
        Self::new(
            size,
            Some(strength),
            Some(seed),
            format!("cells/L{size}_A{strength}_seed{seed}"),
        )
    }

    fn new(size: usize, strength: Option<f64>, seed: Option<u64>, dir: String) -> Self {
        Self {
            size,
            strength,
            seed,
            dir,
            status: CellStatus::Pending,
            error: None,
            wall_time_s: None,
            n_states: None,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.strength.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub format_version: u32,
    pub kind: String,
    pub config_hash: String,
    pub crate_version: String,
    /// Clean baselines first, then cells ordered by size, strength and seed.
    pub cells: Vec<CellRecord>,
}

impl SweepManifest {
    pub fn fresh(cfg: &ExperimentConfig) -> Self {
        let w = &cfg.sweep;
        let mut cells: Vec<CellRecord> = w.sizes.iter().map(|&l| CellRecord::baseline(l)).collect();
        for &l in &w.sizes {
            for &s in &w.strengths {
                for &seed in &w.seeds {
                    cells.push(CellRecord::cell(l, s, seed));
                }
            }
        }
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            kind: "sweep".into(),
            config_hash: cfg.hash(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            cells,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: SweepManifest = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if m.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::format(
                path,
                format!("manifest version {} is not supported", m.format_version),
            ));
        }
        Ok(m)
    }

    /// Writes through a temporary file and a rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_string_pretty(self).expect("manifest serializes"))
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }
}

pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default)]
pub struct SweepControl {
    /// Stop after this many newly computed disordered cells.
    pub max_new_cells: Option<usize>,
    /// Discard an existing manifest and recompute everything.
    pub force: bool,
    /// 0 uses the config value, then the available parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub dir: PathBuf,
    pub computed: usize,
    pub skipped: usize,
    pub failed: Vec<String>,
    pub pending: usize,
}

impl SweepReport {
    pub fn complete(&self) -> bool {
        self.failed.is_empty() && self.pending == 0
    }
}

fn worker_count(cfg: &ExperimentConfig, control: &SweepControl) -> usize {
    match (control.threads, cfg.output.threads) {
        (0, 0) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        (0, t) => t,
        (t, _) => t,
    }
}

fn run_pool<F: Fn(usize) + Sync>(jobs: usize, threads: usize, f: F) {
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs {
                    break;
                }
                f(i);
            });
        }
    });
}

fn run_cell(cfg: &ExperimentConfig, root: &Path, rec: &CellRecord) -> Result<usize> {
    let l = rec.size;
    let spec = cfg.run_spec(
        l,
        rec.strength.unwrap_or(0.0),
        rec.seed.unwrap_or(0),
        cfg.sweep_states(l),
    );
    let th = &cfg.analysis.classify;
    let dir = root.join(&rec.dir);
    let mut out = execute(&spec)?;
    let baseline = if rec.is_baseline() {
        CleanBaseline::from_diagnostics(&out.diagnostics, th.baseline_bins, th.baseline_percentile)?
    } else {
        load_baseline(cfg, root, l)?
    };
    label_states(&mut out.diagnostics, &baseline, th, spec.fermi.side_length())?;
    out.save(&dir, &cfg.sweep.retain)?;
    let spec_path = dir.join("run.json");
    write_atomic(
        &spec_path,
        &serde_json::to_string_pretty(&spec).expect("spec serializes"),
    )?;
    Ok(out.set.energies.len())
}

/// Clean-lattice `⟨T⟩/⟨V⟩` baseline of size `l`, from its stored diagnostics.
pub fn load_baseline(cfg: &ExperimentConfig, root: &Path, l: usize) -> Result<CleanBaseline> {
    let path = root.join(CellRecord::baseline(l).dir).join("diagnostics.csv");
    if !path.exists() {
        return Err(Error::MissingBaseline);
    }
    let th = &cfg.analysis.classify;
    CleanBaseline::from_diagnostics(&read_diagnostics_csv(&path)?, th.baseline_bins, th.baseline_percentile)
}

/// Runs every pending cell under `root`, then rewrites the aggregate tables.
/// Cells already marked done are skipped.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    root: &Path,
    control: &SweepControl,
    log: &(dyn Fn(&str) + Sync),
) -> Result<SweepReport> {
    cfg.validate()?;
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let manifest_path = root.join(MANIFEST_FILE);
    let mut manifest = if manifest_path.exists() && !control.force {
        let m = SweepManifest::read(&manifest_path)?;
        if m.config_hash != cfg.hash() {
            return Err(Error::Config(format!(
                "{} belongs to a different configuration (hash {})",
                root.display(),
                m.config_hash
            )));
        }
        m
    } else {
        SweepManifest::fresh(cfg)
    };
    for c in manifest.cells.iter_mut() {
        if c.status == CellStatus::Failed {
            c.status = CellStatus::Pending;
            c.error = None;
        }
    }
    manifest.write(&manifest_path)?;
    let skipped = manifest.count(CellStatus::Done);
    let threads = worker_count(cfg, control);
    let shared = Mutex::new(manifest);
    let computed = AtomicUsize::new(0);
    let started = AtomicUsize::new(0);

    for phase_baseline in [true, false] {
        let jobs: Vec<usize> = {
            let m = shared.lock().unwrap();
            m.cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_baseline() == phase_baseline && c.status == CellStatus::Pending)
                .map(|(i, _)| i)
                .collect()
        };
        run_pool(jobs.len(), threads, |j| {
            let i = jobs[j];
            let rec = shared.lock().unwrap().cells[i].clone();
            if !phase_baseline {
                if let Some(max) = control.max_new_cells {
                    if started.fetch_add(1, Ordering::SeqCst) >= max {
                        return;
                    }
                }
            }
            log(&format!("running {}", rec.dir));
            let t0 = Instant::now();
            let result = catch_unwind(AssertUnwindSafe(|| run_cell(cfg, root, &rec)))
                .unwrap_or_else(|_| Err(Error::Config(format!("worker panicked in {}", rec.dir))));
            let mut m = shared.lock().unwrap();
            let c = &mut m.cells[i];
            c.wall_time_s = Some(t0.elapsed().as_secs_f64());
            match result {
                Ok(n) => {
                    c.status = CellStatus::Done;
                    c.n_states = Some(n);
                    if !phase_baseline {
                        computed.fetch_add(1, Ordering::SeqCst);
                    }
                    log(&format!("done {} ({:.1} s)", rec.dir, c.wall_time_s.unwrap()));
                }
                Err(e) => {
                    c.status = CellStatus::Failed;
                    c.error = Some(e.to_string());
                    log(&format!("failed {}: {e}", rec.dir));
                }
            }
            if let Err(e) = m.write(&manifest_path) {
                log(&format!("cannot update manifest: {e}"));
            }
        });
    }

    let manifest = shared.into_inner().unwrap();
    manifest.write(&manifest_path)?;
    write_tables(cfg, root, &manifest)?;
    Ok(SweepReport {
        dir: root.to_path_buf(),
        computed: computed.into_inner(),
        skipped,
        failed: manifest
            .cells
            .iter()
            .filter(|c| c.status == CellStatus::Failed)
            .map(|c| format!("{}: {}", c.dir, c.error.as_deref().unwrap_or("")))
            .collect(),
        pending: manifest.count(CellStatus::Pending),
    })
}

/// Per-state results of one finished cell, as read back from disk.
#[derive(Debug, Clone)]
pub struct CellData {
    pub size: usize,
    pub strength: f64,
    pub seed: u64,
    pub energies: Vec<f64>,
    pub diagnostics: Vec<StateDiagnostics>,
}

pub fn load_cells(root: &Path, manifest: &SweepManifest) -> Result<Vec<CellData>> {
    manifest
        .cells
        .iter()
        .filter(|c| !c.is_baseline() && c.status == CellStatus::Done)
        .map(|c| {
            let dir = root.join(&c.dir);
            Ok(CellData {
                size: c.size,
                strength: c.strength.unwrap_or(0.0),
                seed: c.seed.unwrap_or(0),
                energies: read_energies_csv(&dir.join("energies.csv"))?
                    .into_iter()
                    .map(|(_, e, _)| e)
                    .collect(),
                diagnostics: read_diagnostics_csv(&dir.join("diagnostics.csv"))?,
            })
        })
        .collect()
}

fn groups(cells: &[CellData]) -> BTreeMap<(usize, u64), Vec<&CellData>> {
    let mut g: BTreeMap<(usize, u64), Vec<&CellData>> = BTreeMap::new();
    for c in cells {
        g.entry((c.size, c.strength.to_bits())).or_default().push(c);
    }
    g
}

/// Writes `fig1_map.csv`, `fig2_scaling.csv`, `fig3_stats.csv` and
/// `fig4_tv.csv` from the finished cells.
pub fn write_tables(cfg: &ExperimentConfig, root: &Path, manifest: &SweepManifest) -> Result<()> {
    let cells = load_cells(root, manifest)?;
    write_atomic(&root.join("fig1_map.csv"), &fig1_map(cfg, &cells))?;
    write_atomic(&root.join("fig2_scaling.csv"), &fig2_scaling(cfg, &cells))?;
    write_atomic(&root.join("fig3_stats.csv"), &fig3_stats(cfg, &cells)?)?;
    write_atomic(&root.join("fig4_tv.csv"), &fig4_tv(cfg, root, &cells)?)
}

/// Median `log10 IPR₂` per size, strength and `Ẽ` bin, pooled over seeds.
pub fn fig1_map(cfg: &ExperimentConfig, cells: &[CellData]) -> String {
    let nb = cfg.analysis.map_bins;
    let mut w = TableWriter::new(&schema::FIG1_MAP);
    for ((size, bits), group) in groups(cells) {
        let mut bins = vec![Vec::new(); nb];
        for d in group.iter().flat_map(|c| &c.diagnostics) {
            let b = ((d.e_norm * nb as f64) as usize).min(nb - 1);
            bins[b].push(d.ipr2.log10());
        }
        for (b, vals) in bins.iter().enumerate() {
            w.row(&[
                size.to_string(),
                fmt_f64(f64::from_bits(bits)),
                b.to_string(),
                fmt_f64(b as f64 / nb as f64),
                fmt_f64((b + 1) as f64 / nb as f64),
                vals.len().to_string(),
                fmt_opt(median(vals)),
            ]);
        }
    }
    w.finish()
}

/// Mean `IPR₂` per class and size, with the `D₂` fit across sizes.
pub fn fig2_scaling(cfg: &ExperimentConfig, cells: &[CellData]) -> String {
    let strengths: Vec<f64> = if cfg.sweep.scaling_strengths.is_empty() {
        cfg.sweep.strengths.clone()
    } else {
        cfg.sweep.scaling_strengths.clone()
    };
    let mut w = TableWriter::new(&schema::FIG2_SCALING);
    for class in [Label::Anderson, Label::Delocalized, Label::Scarred] {
        for &s in &strengths {
            let mut per_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for c in cells.iter().filter(|c| c.strength == s) {
                let v = per_size.entry(c.size).or_default();
                v.extend(
                    c.diagnostics
                        .iter()
                        .filter(|d| d.label.as_deref() == Some(class.as_str()))
                        .map(|d| d.ipr2),
                );
            }
            let means: Vec<(usize, usize, Option<f64>)> = per_size
                .iter()
                .map(|(&l, v)| {
                    (
                        l,
                        v.len(),
                        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
                    )
                })
                .collect();
            let points: Vec<(f64, f64)> = means.iter().filter_map(|&(l, _, m)| m.map(|m| (l as f64, m))).collect();
            let fit = fit_fractal_dimension(&points, 2.0, class.as_str()).ok();
            for (l, n, m) in means {
                w.row(&[
                    class.as_str().to_string(),
                    fmt_f64(s),
                    l.to_string(),
                    n.to_string(),
                    fmt_opt(m),
                    fmt_opt(fit.as_ref().map(|f| f.slope)),
                    fmt_opt(fit.as_ref().map(|f| f.dim_est)),
                    fmt_opt(fit.as_ref().map(|f| f.stderr)),
                ]);
            }
        }
    }
    w.finish()
}

/// Pooled spacing-ratio statistics per size, strength and named window.
pub fn fig3_stats(cfg: &ExperimentConfig, cells: &[CellData]) -> Result<String> {
    let hist = &cfg.analysis.histogram;
    let mut w = TableWriter::new(&schema::FIG3_STATS);
    for ((size, bits), group) in groups(cells) {
        for nw in &cfg.analysis.windows {
            let mut sets = Vec::new();
            for c in &group {
                let (lo, hi) = nw.window.select(&c.energies);
                if hi - lo >= 3 {
                    sets.push(spacing_ratios(&c.energies[lo..hi])?.ratios);
                }
            }
            let all: Vec<f64> = sets.iter().flatten().copied().collect();
            let refs: Vec<&[f64]> = sets.iter().map(Vec::as_slice).collect();
            let mean = pooled_symmetrized_mean(&refs).ok();
            let h = (!all.is_empty())
                .then(|| empirical_pdf(&all, hist.bins, hist.s_max))
                .transpose()?;
            w.row(&[
                size.to_string(),
                fmt_f64(f64::from_bits(bits)),
                nw.name.clone(),
                sets.len().to_string(),
                all.len().to_string(),
                fmt_opt(mean),
                fmt_opt(h.as_ref().map(|h| distribution_distance(h, ReferenceKind::Poisson))),
                fmt_opt(h.as_ref().map(|h| distribution_distance(h, ReferenceKind::Goe))),
            ]);
        }
    }
    Ok(w.finish())
}

/// Every state's `⟨T⟩/⟨V⟩` next to the clean baseline at its `Ẽ`.
pub fn fig4_tv(cfg: &ExperimentConfig, root: &Path, cells: &[CellData]) -> Result<String> {
    let mut baselines = BTreeMap::new();
    let mut w = TableWriter::new(&schema::FIG4_TV);
    for c in cells {
        let base = baselines
            .entry(c.size)
            .or_insert_with(|| load_baseline(cfg, root, c.size).ok())
            .clone();
        for d in &c.diagnostics {
            let (Some(tv), Some(v)) = (d.tv_ratio, d.v_exp) else {
                continue;
            };
            w.row(&[
                c.size.to_string(),
                fmt_f64(c.strength),
                c.seed.to_string(),
                d.index.to_string(),
                fmt_f64(d.energy),
                fmt_f64(d.e_norm),
                fmt_f64(tv),
                fmt_opt(base.as_ref().map(|b| b.at(d.e_norm))),
                u8::from(wavelength_gate(d.energy, v, cfg.potential.a)).to_string(),
                d.label.clone().unwrap_or_default(),
            ]);
        }
    }
    Ok(w.finish())
}
