use std::path::Path;
use std::process::{Command, Output};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scarloc::spectral::sampling::poisson_levels;
use scarloc::tb::clean_tb_spectrum;

const TINY: &str =
    "[potential]\nr0 = 0.8\nd = 0.03\nv0 = 20.0\na = 2.0\nwells = 1\n[solver]\nn_states = 4\npoints_per_axis = 36\n";

fn scarloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scarloc"))
        .args(args)
        .env_remove("SCARLOC_OUT")
        .env_remove("SCARLOC_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn run_dir(root: &Path, prefix: &str) -> std::path::PathBuf {
    std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with(prefix))
        .unwrap()
}

#[test]
fn solve_twice_reports_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TINY);
    let out = dir.path().join("runs");
    let out = out.to_str().unwrap();
    let first = scarloc(&["solve", "--config", &cfg, "--out", out]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("4 levels"));
    let second = scarloc(&["solve", "--config", &cfg, "--out", out]);
    assert!(second.status.success());
    assert!(stdout(&second).starts_with("up-to-date:"));
    let forced = scarloc(&["solve", "--config", &cfg, "--out", out, "--force"]);
    assert!(stdout(&forced).starts_with("wrote"));
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TINY);
    let o = Command::new(env!("CARGO_BIN_EXE_scarloc"))
        .args(["solve", "--config", &cfg])
        .env("SCARLOC_OUT", dir.path().join("env-out"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run_dir(&dir.path().join("env-out"), "solve-")
        .join("manifest.json")
        .exists());
}

#[test]
fn identical_configs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TINY}[disorder]\nstrength = 0.5\nseeds = [3]\n");
    let cfg = write(dir.path(), "c.toml", &text);
    for name in ["a", "b"] {
        let o = scarloc(&[
            "solve",
            "--config",
            &cfg,
            "--out",
            dir.path().join(name).to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = run_dir(&dir.path().join("a"), "solve-");
    let b = run_dir(&dir.path().join("b"), "solve-");
    for f in [
        "config.toml",
        "seed3/energies.csv",
        "seed3/diagnostics.csv",
        "seed3/disorder.txt",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn missing_parameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &TINY.replace("v0 = 20.0\n", ""));
    let o = scarloc(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("v0"), "{}", stderr(&o));
}

#[test]
fn bad_seed_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TINY);
    let o = scarloc(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--seeds",
        "4..2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn interrupted_sweep_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[potential]\nr0 = 0.8\nd = 0.03\nv0 = 20.0\na = 2.0\nwells = 1\n[solver]\npoints_per_axis = 36\n[sweep]\nsizes = [1, 2]\nstrengths = [0.3, 1.0]\nseeds = [1]\nstates_per_well = 4\n";
    let cfg = write(dir.path(), "c.toml", text);
    let out = dir.path().to_str().unwrap();
    let first = scarloc(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out,
        "--max-cells",
        "1",
        "--threads",
        "1",
    ]);
    assert_eq!(first.status.code(), Some(4), "{}", stderr(&first));
    assert!(stdout(&first).contains("1 computed"));
    let second = scarloc(&["sweep", "--config", &cfg, "--out", out]);
    assert!(second.status.success(), "{}", stderr(&second));
    assert!(stdout(&second).contains("3 computed, 3 skipped"), "{}", stdout(&second));
    let sweep = run_dir(dir.path(), "sweep-");
    let tables: Vec<String> = ["fig1_map.csv", "fig2_scaling.csv", "fig3_stats.csv", "fig4_tv.csv"]
        .iter()
        .map(|t| sweep.join(t).to_str().unwrap().to_owned())
        .collect();
    let mut args = vec!["schema", "--check"];
    args.extend(tables.iter().map(String::as_str));
    let check = scarloc(&args);
    assert!(check.status.success(), "{}", stdout(&check));
    assert_eq!(stdout(&check).lines().filter(|l| l.starts_with("ok ")).count(), 4);
}

#[test]
fn empty_sweep_axis_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{TINY}[sweep]\nsizes = []\n"));
    let o = scarloc(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn mean_sym(out: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix("mean s~"))
        .unwrap()
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn stats_on_poisson_levels() {
    let dir = tempfile::tempdir().unwrap();
    let levels = poisson_levels(100_000, &mut ChaCha8Rng::seed_from_u64(9));
    let text: String = levels.iter().map(|e| format!("{e}\n")).collect();
    let file = write(dir.path(), "levels.txt", &text);
    let o = scarloc(&["stats", &file, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((mean_sym(&stdout(&o)) - 0.386).abs() < 0.005);
    assert!(dir.path().join("histogram.csv").exists());

    let narrow = scarloc(&["stats", &file, "--window", "index:0..2"]);
    assert_eq!(narrow.status.code(), Some(1));
    assert!(stderr(&narrow).contains("at least 3"), "{}", stderr(&narrow));
    let bad = scarloc(&["stats", &file, "--window", "middle"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn tb_clean_lattice_matches_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let text = TINY.replace("wells = 1", "wells = 3") + "[tb]\ne0 = 0.0\nt = -1.0\n";
    let cfg = write(dir.path(), "c.toml", &text);
    let o = scarloc(&["tb", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(run_dir(dir.path(), "tb-").join("clean/energies.csv")).unwrap();
    let mut got: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    got.sort_by(f64::total_cmp);
    let exact = clean_tb_spectrum(3, 0.0, -1.0);
    assert_eq!(got.len(), 9);
    for (a, b) in got.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn tb_compare_against_continuum_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = TINY
        .replace("wells = 1", "wells = 2")
        .replace("n_states = 4", "n_states = 8");
    let cfg = write(dir.path(), "c.toml", &text);
    let out = dir.path().to_str().unwrap();
    assert!(scarloc(&["solve", "--config", &cfg, "--out", out]).status.success());
    let solve = run_dir(dir.path(), "solve-");
    let o = scarloc(&[
        "tb",
        "--config",
        &cfg,
        "--out",
        out,
        "--compare",
        solve.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("clean: 4 levels"), "{}", stdout(&o));
    assert!(run_dir(dir.path(), "tb-").join("clean/compare.csv").exists());
}

#[test]
fn diag_rewrites_identical_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("{TINY}[disorder]\nstrength = 0.4\nseeds = [2]\n"),
    );
    assert!(
        scarloc(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()])
            .status
            .success()
    );
    let run = run_dir(dir.path(), "solve-").join("seed2");
    let o = scarloc(&["diag", run.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(run.join("diagnostics.csv")).unwrap(),
        std::fs::read(run.join("diagnostics_recomputed.csv")).unwrap()
    );
}

#[test]
fn schema_lists_formats() {
    let o = scarloc(&["schema"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for kind in [
        "diagnostics",
        "fig1_map",
        "fig2_scaling",
        "fig3_stats",
        "fig4_tv",
        "manifest v1",
    ] {
        assert!(text.contains(kind), "{kind}");
    }
}
