//! State classes (Anderson-localized, delocalized, scarred) and the size
//! scaling of participation ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{de_broglie, StateDiagnostics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassThresholds {
    /// Accepted range of `IPR₂ · 8πξ²` for Anderson states.
    pub consistency: [f64; 2],
    /// Anderson states need `ξ_tail < side · xi_fraction`.
    pub xi_fraction: f64,
    pub scar_score: f64,
    /// Delocalized states need `IPR₂ < delocalized_ipr / side²`.
    pub delocalized_ipr: f64,
    pub tv_weight: f64,
    pub anisotropy_weight: f64,
    /// Percentile of the clean `⟨T⟩/⟨V⟩` curve used as the scar baseline.
    pub baseline_percentile: f64,
    /// Number of `Ẽ` bins of the clean baseline curve.
    pub baseline_bins: usize,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self {
            consistency: [0.5, 2.0],
            xi_fraction: 1.0 / 3.0,
            scar_score: 0.5,
            delocalized_ipr: 3.0,
            tv_weight: 0.5,
            anisotropy_weight: 0.5,
            baseline_percentile: 0.9,
            baseline_bins: 10,
        }
    }
}

/// Linear-interpolated percentile (`p` in `[0, 1]`) of unsorted data.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let x = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = x.floor() as usize;
    let hi = x.ceil() as usize;
    Some(v[lo] + (x - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 0.5)
}

/// Percentile of the clean system's `⟨T⟩/⟨V⟩` in bins of `Ẽ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanBaseline {
    pub percentile: f64,
    /// One entry per `Ẽ` bin; `None` where the clean run has no states.
    pub curve: Vec<Option<f64>>,
}

impl CleanBaseline {
    pub fn from_diagnostics(clean: &[StateDiagnostics], bins: usize, percentile_p: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::param("baseline_bins", "must be at least 1"));
        }
        let mut groups = vec![Vec::new(); bins];
        for d in clean {
            if let Some(tv) = d.tv_ratio {
                groups[bin_of(d.e_norm, bins)].push(tv);
            }
        }
        if groups.iter().all(|g| g.is_empty()) {
            return Err(Error::MissingBaseline);
        }
        Ok(Self {
            percentile: percentile_p,
            curve: groups.iter().map(|g| percentile(g, percentile_p)).collect(),
        })
    }

    /// Baseline at `Ẽ`, falling back to the nearest populated bin.
    pub fn at(&self, e_norm: f64) -> f64 {
        let k = bin_of(e_norm, self.curve.len());
        (0..self.curve.len())
            .filter_map(|j| self.curve[j].map(|v| (j.abs_diff(k), j, v)))
            .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|t| t.2)
            .expect("baseline has at least one populated bin")
    }
}

fn bin_of(e_norm: f64, bins: usize) -> usize {
    ((e_norm.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScarScore {
    pub tv_excess: f64,
    pub anisotropy: f64,
    pub score: f64,
}

/// `w₁ · max(0, ⟨T⟩/⟨V⟩ - baseline(Ẽ)) + w₂ · anisotropy`.
pub fn scar_score(
    diag: &StateDiagnostics,
    baseline: Option<&CleanBaseline>,
    th: &ClassThresholds,
) -> Result<ScarScore> {
    let baseline = baseline.ok_or(Error::MissingBaseline)?;
    let tv = diag
        .tv_ratio
        .ok_or_else(|| Error::param("tv_ratio", format!("state {} has no ⟨T⟩/⟨V⟩", diag.index)))?;
    let anisotropy = diag
        .anisotropy
        .ok_or_else(|| Error::param("anisotropy", format!("state {} has no anisotropy", diag.index)))?;
    let tv_excess = (tv - baseline.at(diag.e_norm)).max(0.0);
    Ok(ScarScore {
        tv_excess,
        anisotropy,
        score: th.tv_weight * tv_excess + th.anisotropy_weight * anisotropy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Anderson,
    Delocalized,
    Scarred,
    Ambiguous,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Anderson, Label::Delocalized, Label::Scarred, Label::Ambiguous];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Anderson => "anderson",
            Label::Delocalized => "delocalized",
            Label::Scarred => "scarred",
            Label::Ambiguous => "ambiguous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Label::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateClass {
    pub label: Label,
    pub tail_ok: bool,
    /// `IPR₂ · side²`.
    pub ipr_band: f64,
    pub scar_score: f64,
}

/// Anderson, then scarred, then delocalized, else ambiguous.
pub fn classify_state(diag: &StateDiagnostics, th: &ClassThresholds, side_length: f64) -> StateClass {
    let tail_ok = diag.xi_tail.is_some();
    let anderson = match (diag.xi_tail, diag.consistency) {
        (Some(xi), Some(c)) => c >= th.consistency[0] && c <= th.consistency[1] && xi < side_length * th.xi_fraction,
        _ => false,
    };
    let scar = diag.scar_score.unwrap_or(0.0);
    let ipr_band = diag.ipr2 * side_length * side_length;
    let label = if anderson {
        Label::Anderson
    } else if scar > th.scar_score {
        Label::Scarred
    } else if ipr_band < th.delocalized_ipr {
        Label::Delocalized
    } else {
        Label::Ambiguous
    };
    StateClass {
        label,
        tail_ok,
        ipr_band,
        scar_score: scar,
    }
}

/// Fills `tv_excess`, `scar_score` and `label` of every state.
pub fn label_states(
    diags: &mut [StateDiagnostics],
    baseline: &CleanBaseline,
    th: &ClassThresholds,
    side_length: f64,
) -> Result<()> {
    for d in diags.iter_mut() {
        let s = scar_score(d, Some(baseline), th)?;
        d.tv_excess = Some(s.tv_excess);
        d.scar_score = Some(s.score);
        d.label = Some(classify_state(d, th, side_length).label.to_string());
    }
    Ok(())
}

/// `λ(E) < a`: the wavelength resolves the lattice period.
pub fn wavelength_gate(e: f64, v_mean: f64, a: f64) -> bool {
    de_broglie(e, v_mean).is_some_and(|l| l < a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub q: f64,
    /// `d log IPR_q / d log L`.
    pub slope: f64,
    pub intercept: f64,
    /// `D_q = -slope / (q - 1)`.
    pub dim_est: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub class_filter: String,
}

/// Least squares of `log IPR_q` on `log L`.
pub fn fit_fractal_dimension(points: &[(f64, f64)], q: f64, class_filter: &str) -> Result<ScalingFit> {
    if !(q > 1.0) {
        return Err(Error::param("q", "must exceed 1"));
    }
    if points.iter().any(|&(l, v)| !(l > 0.0) || !(v > 0.0)) {
        return Err(Error::param("points", "sizes and IPR values must be positive"));
    }
    let mut sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::param(
            "points",
            format!("need at least 3 distinct sizes, got {}", sizes.len()),
        ));
    }
    let n = points.len() as f64;
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if points.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ScalingFit {
        q,
        slope,
        intercept,
        dim_est: -slope / (q - 1.0),
        stderr,
        n_points: points.len(),
        class_filter: class_filter.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(e_norm: f64, tv: f64) -> StateDiagnostics {
        let mut d = StateDiagnostics::lattice(0, 0.0, e_norm, 0.01);
        d.tv_ratio = Some(tv);
        d.anisotropy = Some(0.0);
        d
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(percentile(&[0.0, 10.0], 0.9), Some(9.0));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn fit_recovers_constructed_exponents() {
        for (power, d2) in [(-2.0, 2.0), (-1.0, 1.0), (0.0, 0.0)] {
            let pts: Vec<(f64, f64)> = [3.0f64, 4.0, 5.0, 7.0]
                .iter()
                .map(|&l| (l, 0.37 * l.powf(power)))
                .collect();
            let fit = fit_fractal_dimension(&pts, 2.0, "test").unwrap();
            assert!((fit.dim_est - d2).abs() < 1e-10);
            assert!(fit.stderr < 1e-10);
        }
        assert!(fit_fractal_dimension(&[(3.0, 1.0), (4.0, 1.0), (4.0, 2.0)], 2.0, "x").is_err());
        assert!(fit_fractal_dimension(&[(3.0, 1.0), (4.0, -1.0), (5.0, 2.0)], 2.0, "x").is_err());
    }

    #[test]
    fn wavelength_gate_boundaries() {
        let a = 2.0;
        // λ = a/2 when E - ⟨V⟩ = (2π/(a/2))²/2
        let e_half = (2.0 * std::f64::consts::PI / (a / 2.0)).powi(2) / 2.0;
        assert!(wavelength_gate(5.0 + e_half, 5.0, a));
        assert!(!wavelength_gate(4.0, 5.0, a));
        assert!(!wavelength_gate(5.0, 5.0, a));
        let lam = de_broglie(12.0, 3.0).unwrap();
        assert!(!wavelength_gate(12.0, 3.0, lam));
    }

    #[test]
    fn baseline_identity() {
        let clean: Vec<StateDiagnostics> = (0..50).map(|i| diag(i as f64 / 49.0, 1.0 + (i % 7) as f64)).collect();
        let b = CleanBaseline::from_diagnostics(&clean, 5, 0.9).unwrap();
        let th = ClassThresholds::default();
        let at = diag(0.3, b.at(0.3));
        assert_eq!(scar_score(&at, Some(&b), &th).unwrap().tv_excess, 0.0);
        assert!(matches!(scar_score(&at, None, &th), Err(Error::MissingBaseline)));
        assert!(CleanBaseline::from_diagnostics(&[], 5, 0.9).is_err());
    }

    #[test]
    fn classification_rules() {
        let th = ClassThresholds::default();
        let side = 10.0;
        let xi = side / 10.0;
        let mut d = StateDiagnostics::lattice(0, 1.0, 0.1, 1.0 / (8.0 * std::f64::consts::PI * xi * xi));
        d.xi_tail = Some(xi);
        d.consistency = Some(1.0);
        assert_eq!(classify_state(&d, &th, side).label, Label::Anderson);

        let u = StateDiagnostics::lattice(0, 1.0, 0.1, 1.0 / (side * side));
        assert_eq!(classify_state(&u, &th, side).label, Label::Delocalized);

        let mut s = StateDiagnostics::lattice(0, 1.0, 0.1, 0.2);
        s.scar_score = Some(0.9);
        assert_eq!(classify_state(&s, &th, side).label, Label::Scarred);

        let a = StateDiagnostics::lattice(0, 1.0, 0.1, 0.2);
        assert_eq!(classify_state(&a, &th, side).label, Label::Ambiguous);
    }

    #[test]
    fn labels_parse() {
        for l in Label::ALL {
            assert_eq!(Label::parse(l.as_str()), Some(l));
        }
    }
}
