//! TOML experiment configuration, its canonical form and hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::ClassThresholds;
use crate::eigen::{Retention, SolverOptions, MAX_POINTS_PER_AXIS, MAX_STATES};
use crate::error::{Error, Result};
use crate::observables::{DiagnosticsOptions, TailPolicy};
use crate::potential::{AmplitudeDistribution, Convention, DisorderParams, FermiParams, WidthDistribution};
use crate::run::{grid_rule_points, RunSpec};
use crate::spectral::{HistogramOptions, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSection,
    #[serde(default)]
    pub disorder: DisorderSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tb: TbSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub r0: f64,
    pub d: f64,
    pub v0: f64,
    pub a: f64,
    pub wells: usize,
    #[serde(default)]
    pub convention: Convention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderSection {
    /// Bumps per unit area.
    pub density: f64,
    /// `⟨A⟩ / V0`.
    pub strength: f64,
    pub width: f64,
    pub amplitude: AmplitudeDistribution,
    pub width_distribution: WidthDistribution,
    pub seeds: Vec<u64>,
}

impl Default for DisorderSection {
    fn default() -> Self {
        Self {
            density: 0.4,
            strength: 0.0,
            width: 0.2,
            amplitude: AmplitudeDistribution::Uniform,
            width_distribution: WidthDistribution::Constant,
            seeds: vec![1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// 0 applies the grid rule.
    pub points_per_axis: usize,
    /// Kinetic energy at which the grid rule resolves the de Broglie wavelength; `None` uses `V0`.
    pub wavelength_excess: Option<f64>,
    pub n_states: usize,
    pub tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    pub seed: u64,
    pub retain: Retention,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            points_per_axis: 0,
            wavelength_excess: None,
            n_states: s.n_states,
            tol: s.tol,
            block_size: s.block_size,
            max_basis: s.max_basis,
            seed: s.seed,
            retain: Retention::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedWindow {
    pub name: String,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub q_values: Vec<f64>,
    pub radial_bins: usize,
    /// `Ẽ` bins of the crossover map.
    pub map_bins: usize,
    pub tail: TailPolicy,
    pub histogram: HistogramOptions,
    pub classify: ClassThresholds,
    pub windows: Vec<NamedWindow>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let d = DiagnosticsOptions::default();
        Self {
            q_values: d.q_values,
            radial_bins: d.radial_bins,
            map_bins: 10,
            tail: d.tail,
            histogram: HistogramOptions::default(),
            classify: ClassThresholds::default(),
            windows: vec![NamedWindow {
                name: "all".into(),
                window: Window::All,
            }],
        }
    }
}

impl AnalysisSection {
    pub fn diagnostics(&self) -> DiagnosticsOptions {
        DiagnosticsOptions {
            q_values: self.q_values.clone(),
            radial_bins: self.radial_bins,
            tail: self.tail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub strengths: Vec<f64>,
    pub seeds: Vec<u64>,
    /// States per run as a multiple of `L²`; `None` uses `solver.n_states`.
    pub states_per_well: Option<usize>,
    /// Strengths entering the size-scaling table; empty means all.
    pub scaling_strengths: Vec<f64>,
    pub retain: Retention,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![3, 4, 5],
            strengths: vec![0.1, 0.3, 1.0],
            seeds: vec![1, 2, 3],
            states_per_well: Some(12),
            scaling_strengths: Vec::new(),
            retain: Retention::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TbSection {
    /// Overrides the estimated onsite energy.
    pub e0: Option<f64>,
    /// Overrides the estimated hopping.
    pub t: Option<f64>,
    /// Grid points per lattice period in the estimation solves.
    pub points_per_cell: usize,
    pub tol: f64,
}

impl Default for TbSection {
    fn default() -> Self {
        Self {
            e0: None,
            t: None,
            points_per_cell: 45,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Worker threads for sweeps; 0 uses the available parallelism.
    pub threads: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Serialization with every default spelled out.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `<kind>-<first 16 hex digits of the hash>`.
    pub fn run_dir_name(&self, kind: &str) -> String {
        format!("{kind}-{}", &self.hash()[..16])
    }

    pub fn fermi(&self, wells: usize) -> FermiParams {
        FermiParams {
            r0: self.potential.r0,
            d: self.potential.d,
            v0: self.potential.v0,
            a: self.potential.a,
            wells,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("`{field}` {why}")));
        let p = &self.potential;
        if p.wells == 0 {
            return bad("potential.wells", "must be at least 1");
        }
        if let Err(Error::Parameter { name, reason }) = self.fermi(p.wells).validate() {
            return Err(Error::Config(format!("`potential.{name}` {reason}")));
        }
        let d = &self.disorder;
        if !(d.density >= 0.0 && d.density.is_finite()) {
            return bad("disorder.density", "must be non-negative");
        }
        if !(d.strength >= 0.0 && d.strength.is_finite()) {
            return bad("disorder.strength", "must be non-negative");
        }
        if !(d.width > 0.0 && d.width.is_finite()) {
            return bad("disorder.width", "must be positive");
        }
        if d.seeds.is_empty() {
            return bad("disorder.seeds", "must not be empty");
        }
        let s = &self.solver;
        if s.n_states == 0 || s.n_states > MAX_STATES {
            return Err(Error::Config(format!("`solver.n_states` must lie in 1..={MAX_STATES}")));
        }
        if s.points_per_axis > MAX_POINTS_PER_AXIS {
            return Err(Error::Config(format!(
                "`solver.points_per_axis` exceeds {MAX_POINTS_PER_AXIS}"
            )));
        }
        if !(s.tol > 0.0) {
            return bad("solver.tol", "must be positive");
        }
        if s.block_size == 0 {
            return bad("solver.block_size", "must be at least 1");
        }
        let a = &self.analysis;
        if a.q_values.iter().any(|q| !(*q >= 2.0)) {
            return bad("analysis.q_values", "entries must be at least 2");
        }
        if a.radial_bins < 8 {
            return bad("analysis.radial_bins", "must be at least 8");
        }
        if a.map_bins == 0 || a.histogram.bins == 0 || a.classify.baseline_bins == 0 {
            return bad("analysis", "bin counts must be positive");
        }
        let w = &self.sweep;
        if w.sizes.is_empty() || w.strengths.is_empty() || w.seeds.is_empty() {
            return bad("sweep", "axes `sizes`, `strengths` and `seeds` must not be empty");
        }
        if w.sizes.contains(&0) {
            return bad("sweep.sizes", "entries must be at least 1");
        }
        if w.strengths.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("sweep.strengths", "entries must be non-negative");
        }
        if w.states_per_well == Some(0) {
            return bad("sweep.states_per_well", "must be at least 1");
        }
        if self.tb.points_per_cell < 8 || !(self.tb.tol > 0.0) {
            return bad("tb", "needs points_per_cell >= 8 and a positive tol");
        }
        Ok(())
    }

    /// Points per axis for `L = wells`: explicit, or from the grid rule.
    pub fn points_per_axis(&self, wells: usize) -> usize {
        if self.solver.points_per_axis > 0 {
            return self.solver.points_per_axis;
        }
        let width = (self.disorder.density > 0.0).then_some(self.disorder.width);
        let excess = self.solver.wavelength_excess.unwrap_or(self.potential.v0);
        grid_rule_points(&self.fermi(wells), width, excess)
    }

    /// Everything needed for one solve.
    pub fn run_spec(&self, wells: usize, strength: f64, seed: u64, n_states: usize) -> RunSpec {
        let d = &self.disorder;
        let disorder = (strength > 0.0 && d.density > 0.0).then_some(DisorderParams {
            density: d.density,
            amp_mean: strength * self.potential.v0,
            width: d.width,
            amplitude: d.amplitude,
            width_distribution: d.width_distribution,
        });
        RunSpec {
            fermi: self.fermi(wells),
            convention: self.potential.convention,
            disorder,
            seed,
            points_per_axis: self.points_per_axis(wells),
            solver: SolverOptions {
                n_states,
                tol: self.solver.tol,
                block_size: self.solver.block_size,
                max_basis: self.solver.max_basis,
                seed: self.solver.seed,
            },
            diagnostics: self.analysis.diagnostics(),
        }
    }

    pub fn sweep_states(&self, wells: usize) -> usize {
        self.sweep
            .states_per_well
            .map_or(self.solver.n_states, |k| k * wells * wells)
    }
}

/// Parses `1,2,3` or `1..4` (half-open) into seeds.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
        if b <= a {
            return Err(format!("empty seed range {text}"));
        }
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad seed `{s}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[potential]\nr0 = 0.8\nd = 0.03\nv0 = 20.0\na = 2.0\nwells = 1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.potential.convention, Convention::WellsDown);
        assert_eq!(c.disorder.density, 0.4);
        assert_eq!(c.disorder.width, 0.2);
        assert_eq!(c.sweep.sizes, vec![3, 4, 5]);
    }

    #[test]
    fn canonical_round_trip() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let text = c.canonical();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c, again);
        assert_eq!(text, again.canonical());
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let b = ExperimentConfig::parse(&MINIMAL.replace("v0 = 20.0", "v0 = 21.0")).unwrap();
        assert_ne!(a.hash(), b.hash());
        // formatting differences do not matter
        let c = ExperimentConfig::parse(&MINIMAL.replace("v0 = 20.0", "v0   =   20.0  # depth")).unwrap();
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn missing_key_is_named() {
        let err = ExperimentConfig::parse(&MINIMAL.replace("v0 = 20.0\n", "")).unwrap_err();
        assert!(err.to_string().contains("v0"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn empty_axes_rejected() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}[sweep]\nsizes = []\n")).unwrap_err();
        assert!(err.to_string().contains("sweep"), "{err}");
    }

    #[test]
    fn windows_and_retention_parse() {
        let text = format!(
            "{MINIMAL}[solver]\nretain = {{ every = 3 }}\n[[analysis.windows]]\nname = \"low\"\nwindow = {{ index = [0, 20] }}\n[[analysis.windows]]\nname = \"bound\"\nwindow = {{ energy = [0.0, 20.0] }}\n"
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.solver.retain, Retention::Every(3));
        assert_eq!(c.analysis.windows[0].window, Window::Index(0, 20));
        assert_eq!(c.analysis.windows[1].window, Window::Energy(0.0, 20.0));
        assert_eq!(ExperimentConfig::parse(&c.canonical()).unwrap(), c);
    }

    #[test]
    fn grid_rule_for_default_lattice() {
        let text = MINIMAL.replace("wells = 1", "wells = 5");
        let c = ExperimentConfig::parse(&text).unwrap();
        let n = c.points_per_axis(5);
        let h = 10.0 / (n + 1) as f64;
        assert!(h <= 0.045 + 1e-12 && 10.0 / n as f64 > 0.045);
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("1,2, 5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5]);
        assert!(parse_seeds("x").is_err());
    }
}
