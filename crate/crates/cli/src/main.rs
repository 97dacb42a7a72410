use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scarloc::config::{parse_seeds, ExperimentConfig};
use scarloc::experiment::{self, compare_tb, load_levels, Outcome, RunManifest};
use scarloc::schema;
use scarloc::spectral::{HistogramOptions, Window};
use scarloc::sweep::{run_sweep, SweepControl};
use scarloc::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "scarloc",
    version,
    about = "Eigenstates of disordered periodic-well potentials in 2D"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides `output.dir`.
    #[arg(long, env = "SCARLOC_OUT")]
    out: Option<PathBuf>,
    /// Recompute even if a finished run with the same hash exists.
    #[arg(long)]
    force: bool,
    /// Seed list (`1,2,3`) or half-open range (`1..6`).
    #[arg(long)]
    seeds: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one lattice (clean plus each disorder seed).
    Solve(RunArgs),
    /// Run or resume a sweep over sizes, strengths and seeds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads; overrides `output.threads`.
        #[arg(long, env = "SCARLOC_THREADS")]
        threads: Option<usize>,
        /// Stop after this many newly computed cells.
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Spacing-ratio statistics of a stored spectrum.
    Stats {
        /// energies.csv, a run directory, or a plain list of levels.
        input: PathBuf,
        /// `all`, `index:LO..HI` or `energy:LO..HI`.
        #[arg(long, default_value = "all")]
        window: String,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long, default_value_t = 5.0)]
        s_max: f64,
        /// Directory for stats_summary.csv and histogram.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce the configured lattice to the tight-binding model.
    Tb {
        #[command(flatten)]
        run: RunArgs,
        /// Continuum run (solve directory or one of its runs) to compare against.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Recompute diagnostics from the stored states of a run.
    Diag {
        run_dir: PathBuf,
        /// Defaults to the config.toml of the enclosing run directory.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print table formats, or check files against them.
    Schema {
        #[arg(long, num_args = 1..)]
        check: Vec<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::NotConverged { .. } | Error::Factorization(_) => EXIT_NUMERICAL,
        _ => EXIT_FAILURE,
    }
}

fn load_config(run: &RunArgs, sweep: bool) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut cfg = ExperimentConfig::load(&run.config)?;
    if let Some(s) = &run.seeds {
        let seeds = parse_seeds(s).map_err(|e| Error::Config(format!("--seeds: {e}")))?;
        if sweep {
            cfg.sweep.seeds = seeds;
        } else {
            cfg.disorder.seeds = seeds;
        }
        cfg.validate()?;
    }
    let out = run.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn report(outcome: &Outcome) {
    match outcome {
        Outcome::UpToDate(dir) => println!("up-to-date: {}", dir.display()),
        Outcome::Ran(dir, m) => {
            println!(
                "wrote {} ({} runs, {:.2} s)",
                dir.display(),
                m.runs.len(),
                m.wall_time_s
            );
            for r in &m.runs {
                println!("  {}: {} levels", r.dir, r.n_states);
            }
        }
    }
}

fn cmd_solve(run: &RunArgs) -> Result<u8, Error> {
    let (cfg, out) = load_config(run, false)?;
    report(&experiment::solve(&cfg, &out, run.force)?);
    Ok(0)
}

fn cmd_sweep(run: &RunArgs, threads: Option<usize>, max_cells: Option<usize>) -> Result<u8, Error> {
    let (cfg, out) = load_config(run, true)?;
    let dir = out.join(cfg.run_dir_name("sweep"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    std::fs::write(dir.join("config.toml"), cfg.canonical()).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let control = SweepControl {
        max_new_cells: max_cells,
        force: run.force,
        threads: threads.unwrap_or(0),
    };
    let rep = run_sweep(&cfg, &dir, &control, &|line| eprintln!("{line}"))?;
    println!(
        "{}: {} computed, {} skipped, {} failed, {} pending",
        dir.display(),
        rep.computed,
        rep.skipped,
        rep.failed.len(),
        rep.pending
    );
    for f in &rep.failed {
        println!("  failed {f}");
    }
    Ok(if rep.complete() { 0 } else { EXIT_PARTIAL })
}

fn cmd_stats(input: &Path, window: &str, bins: usize, s_max: f64, out: Option<&Path>) -> Result<u8, Error> {
    let window = Window::parse(window).map_err(Error::Config)?;
    let st = experiment::stats(input, window, &HistogramOptions { bins, s_max }, out)?;
    println!("levels      {}", st.n_levels());
    println!(
        "ratios      {} ({} degenerate spacings dropped)",
        st.ratios.len(),
        st.n_dropped
    );
    println!("mean s~     {:.6}", st.mean_sym);
    println!("poisson     {:.6}", scarloc::spectral::poisson_mean_sym());
    println!("goe         {:.6}", scarloc::spectral::goe_surmise_mean_sym());
    println!("tv poisson  {:.6}", st.tv_poisson);
    println!("tv goe      {:.6}", st.tv_goe);
    Ok(0)
}

fn cmd_tb(run: &RunArgs, compare: Option<&Path>) -> Result<u8, Error> {
    let (cfg, out) = load_config(run, false)?;
    let outcome = experiment::tb(&cfg, &out, run.force)?;
    report(&outcome);
    let Some(cont) = compare else { return Ok(0) };
    let dir = outcome.dir();
    let m = RunManifest::read(&dir.join(experiment::MANIFEST_FILE))?;
    let nested = cont.join(experiment::MANIFEST_FILE).exists();
    for r in &m.runs {
        let source = if nested { cont.join(&r.dir) } else { cont.to_path_buf() };
        if nested && !source.exists() {
            continue;
        }
        let c = compare_tb(&load_levels(&source)?, &load_levels(&dir.join(&r.dir))?)?;
        let path = dir.join(&r.dir).join("compare.csv");
        std::fs::write(&path, &c.table).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        match c.spacing_spearman {
            Some(rho) => println!("  {}: {} levels, spacing rank correlation {rho:.4}", r.dir, c.n_levels),
            None => println!("  {}: {} levels, too few for a rank correlation", r.dir, c.n_levels),
        }
        if !nested {
            break;
        }
    }
    Ok(0)
}

fn cmd_diag(run_dir: &Path, config: Option<&Path>) -> Result<u8, Error> {
    let path = match config {
        Some(p) => p.to_path_buf(),
        None => run_dir
            .parent()
            .map(|p| p.join("config.toml"))
            .filter(|p| p.exists())
            .ok_or_else(|| Error::Config("no config.toml next to the run; pass --config".into()))?,
    };
    let cfg = ExperimentConfig::load(&path)?;
    let rows = experiment::diag(&cfg, run_dir)?;
    println!(
        "recomputed {} states into {}",
        rows.len(),
        run_dir.join("diagnostics_recomputed.csv").display()
    );
    Ok(0)
}

fn cmd_schema(check: &[PathBuf]) -> Result<u8, Error> {
    if check.is_empty() {
        for s in schema::ALL {
            let cols: Vec<&str> = s.columns.iter().map(|c| c.name).collect();
            let extra = s.variadic_prefix.map(|p| format!(",{p}*")).unwrap_or_default();
            println!("{} v{}: {}{extra}", s.kind, s.version, cols.join(","));
        }
        println!("manifest v{}", experiment::RUN_MANIFEST_VERSION);
        println!("sweep manifest v{}", scarloc::sweep::MANIFEST_FORMAT_VERSION);
        return Ok(0);
    }
    let mut bad = 0;
    for p in check {
        match schema::read_table(p) {
            Ok(t) => println!(
                "ok {} ({} v{}, {} rows)",
                p.display(),
                t.schema.kind,
                t.schema.version,
                t.rows.len()
            ),
            Err(e) => {
                println!("bad {e}");
                bad += 1;
            }
        }
    }
    Ok(if bad == 0 { 0 } else { EXIT_FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(run) => cmd_solve(run),
        Command::Sweep {
            run,
            threads,
            max_cells,
        } => cmd_sweep(run, *threads, *max_cells),
        Command::Stats {
            input,
            window,
            bins,
            s_max,
            out,
        } => cmd_stats(input, window, *bins, *s_max, out.as_deref()),
        Command::Tb { run, compare } => cmd_tb(run, compare.as_deref()),
        Command::Diag { run_dir, config } => cmd_diag(run_dir, config.as_deref()),
        Command::Schema { check } => cmd_schema(check),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
