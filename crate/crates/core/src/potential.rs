//! Periodic Fermi-well lattice and Gaussian-bump disorder.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};

/// Gaussian contributions are dropped beyond this many widths (relative error < 1e-8).
pub const BUMP_CUTOFF_WIDTHS: f64 = 6.0;

/// Wells further than `r0 + WELL_CUTOFF_STEEPNESS * d` from a point contribute below f64 resolution.
const WELL_CUTOFF_STEEPNESS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiParams {
    /// Well radius.
    pub r0: f64,
    /// Edge steepness.
    pub d: f64,
    /// Well depth.
    pub v0: f64,
    /// Lattice period.
    pub a: f64,
    /// Wells per axis.
    pub wells: usize,
}

impl Default for FermiParams {
    fn default() -> Self {
        Self {
            r0: 0.8,
            d: 0.03,
            v0: 20.0,
            a: 2.0,
            wells: 5,
        }
    }
}

impl FermiParams {
    pub fn with_wells(wells: usize) -> Self {
        Self {
            wells,
            ..Self::default()
        }
    }

    pub fn side_length(&self) -> f64 {
        self.a * self.wells as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("r0", self.r0)?;
        positive("d", self.d)?;
        positive("v0", self.v0)?;
        positive("a", self.a)?;
        if self.wells == 0 {
            return Err(Error::param("wells", "must be at least 1"));
        }
        Ok(())
    }

    /// Centre of well `(i, j)`, `i` along x.
    pub fn well_center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.a, (j as f64 + 0.5) * self.a]
    }

    pub fn well_centers(&self) -> impl Iterator<Item = (usize, usize, [f64; 2])> + '_ {
        (0..self.wells).flat_map(move |j| (0..self.wells).map(move |i| (i, j, self.well_center(i, j))))
    }
}

/// Sign convention for combining the well profiles into `V_ext`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `V0 - Σ profile`: well bottoms near 0, barriers at `V0`.
    #[default]
    WellsDown,
    /// `Σ profile` as written, i.e. plateaus of height `V0` over each disk.
    Profile,
}

/// Symmetrized Fermi profile `V0 coth(r0/2d) sinh(r0/d) / (cosh(r/d) + cosh(r0/d))`.
///
/// Uses `coth(u/2) sinh(u) = 1 + cosh(u)` and factors out the largest
/// exponent, so it never overflows.
pub fn fermi_well_value(params: &FermiParams, r: f64) -> f64 {
    let u = params.r0 / params.d;
    let w = r.abs() / params.d;
    if w.is_infinite() {
        return 0.0;
    }
    let m = u.max(w);
    let num = 2.0 * (-m).exp() + (u - m).exp() + (-u - m).exp();
    let den = (w - m).exp() + (-w - m).exp() + (u - m).exp() + (-u - m).exp();
    params.v0 * num / den
}

pub fn build_lattice_potential(params: &FermiParams, grid: &Grid2D) -> Result<ScalarField> {
    build_lattice_potential_with(params, grid, Convention::WellsDown)
}

pub fn build_lattice_potential_with(
    params: &FermiParams,
    grid: &Grid2D,
    convention: Convention,
) -> Result<ScalarField> {
    params.validate()?;
    let side = params.side_length();
    if (grid.side_length() - side).abs() > 1e-9 * side {
        return Err(Error::GridMismatch(format!(
            "grid side {} does not match a*L = {side}",
            grid.side_length()
        )));
    }
    let cutoff = params.r0 + WELL_CUTOFF_STEEPNESS * params.d;
    let origin = grid.origin();
    let values = grid
        .points()
        .map(|(_, [x, y])| {
            let (lx, ly) = (x - origin[0], y - origin[1]);
            // only wells whose cell lies within the cutoff can contribute
            let span = |c: f64| {
                let lo = ((c - cutoff) / params.a - 0.5).floor().max(0.0) as usize;
                let hi = (((c + cutoff) / params.a - 0.5).ceil().max(0.0) as usize).min(params.wells - 1);
                lo..=hi
            };
            let mut sum = 0.0;
            for j in span(ly) {
                for i in span(lx) {
                    let [cx, cy] = params.well_center(i, j);
                    let r = (lx - cx).hypot(ly - cy);
                    if r <= cutoff {
                        sum += fermi_well_value(params, r);
                    }
                }
            }
            match convention {
                Convention::WellsDown => params.v0 - sum,
                Convention::Profile => sum,
            }
        })
        .collect();
    ScalarField::new(*grid, values)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeDistribution {
    /// Uniform on `[0, 2⟨A⟩]`.
    #[default]
    Uniform,
    Constant,
    /// `|N(0, s²)|` with `s = ⟨A⟩ √(π/2)`.
    HalfNormal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthDistribution {
    #[default]
    Constant,
    /// Uniform on `[σ/2, 3σ/2]`.
    Uniform,
}

impl std::fmt::Display for AmplitudeDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Constant => "constant",
            Self::HalfNormal => "half_normal",
        })
    }
}

impl std::fmt::Display for WidthDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Constant => "constant",
            Self::Uniform => "uniform",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderParams {
    /// Bumps per unit area.
    pub density: f64,
    /// Mean amplitude ⟨A⟩ (absolute energy).
    pub amp_mean: f64,
    /// Mean width ⟨σ⟩.
    pub width: f64,
    pub amplitude: AmplitudeDistribution,
    pub width_distribution: WidthDistribution,
}

impl DisorderParams {
    pub fn new(density: f64, amp_mean: f64, width: f64) -> Self {
        Self {
            density,
            amp_mean,
            width,
            amplitude: AmplitudeDistribution::Uniform,
            width_distribution: WidthDistribution::Constant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub position: [f64; 2],
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub bumps: Vec<Bump>,
    pub seed: u64,
    pub params: DisorderParams,
    pub side_length: f64,
}

pub fn bump_count(density: f64, side_length: f64) -> usize {
    (density * side_length * side_length).round() as usize
}

pub fn sample_disorder(
    density: f64,
    amp_mean: f64,
    width: f64,
    seed: u64,
    side_length: f64,
) -> Result<DisorderRealization> {
    sample_disorder_with(&DisorderParams::new(density, amp_mean, width), seed, side_length)
}

pub fn sample_disorder_with(params: &DisorderParams, seed: u64, side_length: f64) -> Result<DisorderRealization> {
    if !(params.density.is_finite() && params.density >= 0.0) {
        return Err(Error::param("density", "must be non-negative"));
    }
    if !(params.amp_mean.is_finite() && params.amp_mean >= 0.0) {
        return Err(Error::param("amp_mean", "must be non-negative"));
    }
    if !(params.width.is_finite() && params.width > 0.0) {
        return Err(Error::param("width", "must be positive"));
    }
    if !(side_length.is_finite() && side_length > 0.0) {
        return Err(Error::param("side_length", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_normal = Normal::new(0.0, params.amp_mean * (std::f64::consts::PI / 2.0).sqrt())
        .map_err(|e| Error::param("amp_mean", e.to_string()))?;
    let open_unit = |rng: &mut ChaCha8Rng| loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    };
    let count = bump_count(params.density, side_length);
    let mut bumps = Vec::with_capacity(count);
    for _ in 0..count {
        let x = side_length * open_unit(&mut rng);
        let y = side_length * open_unit(&mut rng);
        let amplitude = match params.amplitude {
            AmplitudeDistribution::Uniform => 2.0 * params.amp_mean * rng.random::<f64>(),
            AmplitudeDistribution::Constant => params.amp_mean,
            AmplitudeDistribution::HalfNormal => half_normal.sample(&mut rng).abs(),
        };
        let width = match params.width_distribution {
            WidthDistribution::Constant => params.width,
            WidthDistribution::Uniform => params.width * (0.5 + rng.random::<f64>()),
        };
        bumps.push(Bump {
            position: [x, y],
            amplitude,
            width,
        });
    }
    Ok(DisorderRealization {
        bumps,
        seed,
        params: *params,
        side_length,
    })
}

/// `Σ A_i exp(-|r - r_i|² / 2σ_i²)`, each bump truncated at [`BUMP_CUTOFF_WIDTHS`] widths.
pub fn render_disorder(real: &DisorderRealization, grid: &Grid2D) -> Result<ScalarField> {
    if (grid.side_length() - real.side_length).abs() > 1e-9 * real.side_length {
        return Err(Error::GridMismatch(format!(
            "realization side {} vs grid side {}",
            real.side_length,
            grid.side_length()
        )));
    }
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let origin = grid.origin();
    let mut values = vec![0.0; grid.len()];
    for bump in &real.bumps {
        let cutoff = BUMP_CUTOFF_WIDTHS * bump.width;
        let inv = 1.0 / (2.0 * bump.width * bump.width);
        let range = |c: f64| {
            // coordinate of index k is (k + 1) h
            let lo = ((c - cutoff) / h - 1.0).ceil().max(0.0) as usize;
            let hi = ((c + cutoff) / h - 1.0).floor();
            if hi < 0.0 {
                return 0..0;
            }
            lo..(hi as usize + 1).min(n)
        };
        let bx = bump.position[0];
        let by = bump.position[1];
        for iy in range(by) {
            let dy = origin[1] + (iy as f64 + 1.0) * h - by;
            for ix in range(bx) {
                let dx = origin[0] + (ix as f64 + 1.0) * h - bx;
                let r2 = dx * dx + dy * dy;
                if r2 <= cutoff * cutoff {
                    values[iy * n + ix] += bump.amplitude * (-r2 * inv).exp();
                }
            }
        }
    }
    ScalarField::new(*grid, values)
}

pub fn total_potential(v_ext: &ScalarField, v_imp: &ScalarField) -> Result<ScalarField> {
    v_ext.grid().ensure_same(v_imp.grid())?;
    let values = v_ext.values().iter().zip(v_imp.values()).map(|(a, b)| a + b).collect();
    ScalarField::new(*v_ext.grid(), values)
}

const DISORDER_HEADER: &str = "# scarloc-disorder v1";

impl DisorderRealization {
    /// Line-oriented text form; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let _ = writeln!(out, "{DISORDER_HEADER}");
        let _ = writeln!(
            out,
            "# seed={} density={} amp_mean={} width={} side_length={} amplitude={} width_distribution={}",
            self.seed, p.density, p.amp_mean, p.width, self.side_length, p.amplitude, p.width_distribution
        );
        let _ = writeln!(out, "# x y A sigma");
        for b in &self.bumps {
            let _ = writeln!(out, "{} {} {} {}", b.position[0], b.position[1], b.amplitude, b.width);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|reason| Error::format(path, reason))
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(DISORDER_HEADER) {
            return Err("missing disorder header".into());
        }
        let meta = lines.next().ok_or("missing metadata line")?;
        let field = |key: &str| -> std::result::Result<&str, String> {
            meta.trim_start_matches('#')
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| format!("missing metadata key `{key}`"))
        };
        let num = |key: &str| -> std::result::Result<f64, String> {
            field(key)?.parse().map_err(|e| format!("bad `{key}`: {e}"))
        };
        let amplitude = match field("amplitude")? {
            "uniform" => AmplitudeDistribution::Uniform,
            "constant" => AmplitudeDistribution::Constant,
            "half_normal" => AmplitudeDistribution::HalfNormal,
            other => return Err(format!("unknown amplitude distribution `{other}`")),
        };
        let width_distribution = match field("width_distribution")? {
            "constant" => WidthDistribution::Constant,
            "uniform" => WidthDistribution::Uniform,
            other => return Err(format!("unknown width distribution `{other}`")),
        };
        let params = DisorderParams {
            density: num("density")?,
            amp_mean: num("amp_mean")?,
            width: num("width")?,
            amplitude,
            width_distribution,
        };
        let seed = field("seed")?.parse().map_err(|e| format!("bad seed: {e}"))?;
        let side_length = num("side_length")?;
        let mut bumps = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", lineno + 3))?;
            if cols.len() != 4 {
                return Err(format!("line {}: expected 4 columns", lineno + 3));
            }
            bumps.push(Bump {
                position: [cols[0], cols[1]],
                amplitude: cols[2],
                width: cols[3],
            });
        }
        Ok(Self {
            bumps,
            seed,
            params,
            side_length,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn defaults() -> FermiParams {
        FermiParams::with_wells(1)
    }

    // reference values from a 50-digit evaluation of the unsimplified formula
    const PLATEAU: f64 = 20.0;
    const AT_R0: f64 = 10.000_000_000_052_462;
    const AT_HALF: f64 = 19.999_092_042_730_87;
    const AT_085: f64 = 3.177_382_097_634_972;
    const AT_ONE: f64 = 0.025_420_325_261_760_527;

    #[test]
    fn fermi_profile_matches_high_precision_reference() {
        let p = defaults();
        for (r, want) in [
            (0.0, PLATEAU),
            (0.8, AT_R0),
            (0.5, AT_HALF),
            (0.85, AT_085),
            (1.0, AT_ONE),
        ] {
            let got = fermi_well_value(&p, r);
            assert!((got - want).abs() <= 1e-13 * want, "r={r}: {got} vs {want}");
        }
        assert!((fermi_well_value(&p, 0.8) / fermi_well_value(&p, 0.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn fermi_profile_agrees_with_naive_form_where_it_is_safe() {
        let p = FermiParams {
            r0: 0.5,
            d: 0.1,
            ..defaults()
        };
        let coth = |x: f64| x.cosh() / x.sinh();
        for i in 0..50 {
            let r = i as f64 * 0.05;
            let naive =
                p.v0 * coth(p.r0 / (2.0 * p.d)) * (p.r0 / p.d).sinh() / ((r / p.d).cosh() + (p.r0 / p.d).cosh());
            assert!((fermi_well_value(&p, r) - naive).abs() < 1e-12 * p.v0);
        }
    }

    #[test]
    fn fermi_profile_never_overflows() {
        let p = FermiParams { d: 0.001, ..defaults() };
        for r in [0.0, 0.8, 5.0, 1e3, 1e6] {
            let v = fermi_well_value(&p, r);
            assert!(v.is_finite() && v >= 0.0);
        }
        assert_eq!(fermi_well_value(&defaults(), 30.0), 0.0);
        assert_eq!(fermi_well_value(&defaults(), f64::INFINITY), 0.0);
    }

    #[test]
    fn lattice_has_wells_at_zero_and_barriers_at_v0() {
        let p = FermiParams::with_wells(3);
        // spacing 6/(n+1) = 0.02 puts grid points on well centres and cell corners
        let g = make_grid(6.0, 299).unwrap();
        let v = build_lattice_potential(&p, &g).unwrap();
        for (_, _, c) in p.well_centers() {
            assert!(v.sample_nearest(c).abs() < 1e-3);
        }
        assert!((v.sample_nearest([2.0, 2.0]) - 20.0).abs() < 1e-3);
        assert!((v.sample_nearest([4.0, 4.0]) - 20.0).abs() < 1e-3);
        assert!(v.min() > -1e-6 && v.max() <= 20.0 + 1e-12);
    }

    #[test]
    fn single_well_is_dihedrally_symmetric() {
        let p = FermiParams::with_wells(1);
        let g = make_grid(2.0, 41).unwrap();
        let v = build_lattice_potential(&p, &g).unwrap();
        let n = g.points_per_axis();
        for iy in 0..n {
            for ix in 0..n {
                let here = v.values()[g.index(ix, iy)];
                assert!((here - v.values()[g.index(iy, ix)]).abs() < 1e-12);
                assert!((here - v.values()[g.index(n - 1 - ix, iy)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_cells_repeat() {
        let p = FermiParams::with_wells(4);
        let g = make_grid(8.0, 199).unwrap(); // 50 points per period
        let v = build_lattice_potential(&p, &g).unwrap();
        let per = 50;
        for iy in 0..per {
            for ix in 0..per {
                let a = v.values()[g.index(per + ix, per + iy)];
                let b = v.values()[g.index(2 * per + ix, per + iy)];
                let c = v.values()[g.index(per + ix, 2 * per + iy)];
                assert!((a - b).abs() < 1e-8 && (a - c).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let g = make_grid(5.0, 32).unwrap();
        assert!(matches!(
            build_lattice_potential(&FermiParams::with_wells(2), &g),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn bump_count_is_deterministic() {
        let r = sample_disorder(0.4, 6.0, 0.2, 1, 10.0).unwrap();
        assert_eq!(r.bumps.len(), 40);
        let r = sample_disorder(0.0, 6.0, 0.2, 1, 10.0).unwrap();
        assert!(r.bumps.is_empty());
        let g = make_grid(10.0, 32).unwrap();
        assert!(render_disorder(&r, &g).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_bumps() {
        let a = sample_disorder(0.4, 6.0, 0.2, 99, 8.0).unwrap();
        let b = sample_disorder(0.4, 6.0, 0.2, 99, 8.0).unwrap();
        assert_eq!(a, b);
        let c = sample_disorder(0.4, 6.0, 0.2, 100, 8.0).unwrap();
        assert_ne!(a.bumps, c.bumps);
    }

    #[test]
    fn samples_respect_support() {
        for amplitude in [
            AmplitudeDistribution::Uniform,
            AmplitudeDistribution::Constant,
            AmplitudeDistribution::HalfNormal,
        ] {
            let params = DisorderParams {
                amplitude,
                width_distribution: WidthDistribution::Uniform,
                ..DisorderParams::new(2.0, 3.0, 0.2)
            };
            let r = sample_disorder_with(&params, 5, 6.0).unwrap();
            for b in &r.bumps {
                assert!(b.position.iter().all(|&c| c > 0.0 && c < 6.0));
                assert!(b.amplitude >= 0.0 && b.width > 0.0);
                if amplitude == AmplitudeDistribution::Uniform {
                    assert!(b.amplitude <= 6.0);
                }
            }
        }
    }

    #[test]
    fn ensemble_mean_amplitude_converges() {
        for amplitude in [AmplitudeDistribution::Uniform, AmplitudeDistribution::HalfNormal] {
            let params = DisorderParams {
                amplitude,
                ..DisorderParams::new(1.0, 6.0, 0.2)
            };
            let r = sample_disorder_with(&params, 11, 110.0).unwrap(); // 12100 bumps
            let a: Vec<f64> = r.bumps.iter().map(|b| b.amplitude).collect();
            let n = a.len() as f64;
            let mean = a.iter().sum::<f64>() / n;
            let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((mean - 6.0).abs() < 3.0 * se, "{amplitude}: {mean} ± {se}");
        }
    }

    #[test]
    fn single_bump_renders_gaussian() {
        let g = make_grid(4.0, 79).unwrap(); // h = 0.05
        let h = g.spacing();
        let p = g.coord(40, 40);
        let real = DisorderRealization {
            bumps: vec![Bump {
                position: p,
                amplitude: 1.0,
                width: 4.0 * h,
            }],
            seed: 0,
            params: DisorderParams::new(0.0, 1.0, 0.2),
            side_length: 4.0,
        };
        let f = render_disorder(&real, &g).unwrap();
        assert!((f.values()[g.index(40, 40)] - 1.0).abs() < 1e-8);
        assert!((f.values()[g.index(44, 40)] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((f.values()[g.index(40, 36)] - 0.606_530_659_712_633).abs() < 1e-12);
        // beyond 6σ nothing is added
        assert_eq!(f.values()[g.index(65, 40)], 0.0);

        let mut twice = real.clone();
        twice.bumps.push(real.bumps[0]);
        let f2 = render_disorder(&twice, &g).unwrap();
        for (a, b) in f.values().iter().zip(f2.values()) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bump_inside_well_adds_to_well_value() {
        let p = FermiParams::with_wells(1);
        let g = make_grid(2.0, 39).unwrap();
        let v_ext = build_lattice_potential(&p, &g).unwrap();
        let at = g.coord(17, 21);
        let real = DisorderRealization {
            bumps: vec![Bump {
                position: at,
                amplitude: 3.5,
                width: 0.2,
            }],
            seed: 0,
            params: DisorderParams::new(0.0, 3.5, 0.2),
            side_length: 2.0,
        };
        let v_imp = render_disorder(&real, &g).unwrap();
        let total = total_potential(&v_ext, &v_imp).unwrap();
        let k = g.index(17, 21);
        assert!((total.values()[k] - (v_ext.values()[k] + 3.5)).abs() < 1e-12);
        let zero = ScalarField::zeros(g);
        assert_eq!(total_potential(&v_ext, &zero).unwrap(), v_ext);
        assert_eq!(total_potential(&zero, &zero).unwrap(), zero);
    }

    #[test]
    fn realization_text_round_trips_exactly() {
        let params = DisorderParams {
            amplitude: AmplitudeDistribution::HalfNormal,
            ..DisorderParams::new(0.4, 6.0, 0.2)
        };
        let r = sample_disorder_with(&params, 1234, 10.0).unwrap();
        let text = r.to_text();
        assert!(text.lines().nth(1).unwrap().contains("seed=1234"));
        assert_eq!(DisorderRealization::from_text(&text).unwrap(), r);
    }
}
