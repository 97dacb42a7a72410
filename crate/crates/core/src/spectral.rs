//! Level statistics without unfolding: spacing ratios and their Poisson / GOE
//! reference distributions.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{self, fmt_f64, TableWriter};

/// Spacings at or below this fraction of the spectral span count as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// `2 ln 2 - 1`, the mean symmetrized ratio of uncorrelated levels.
pub fn poisson_mean_sym() -> f64 {
    2.0 * std::f64::consts::LN_2 - 1.0
}

/// `4 - 2√3`, the mean symmetrized ratio of the 3×3 GOE surmise.
pub fn goe_surmise_mean_sym() -> f64 {
    4.0 - 2.0 * 3.0f64.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacingRatios {
    pub ratios: Vec<f64>,
    pub n_dropped: usize,
}

/// `s_n = δ_n / δ_{n-1}` over consecutive non-degenerate spacings.
///
/// A spacing `δ ≤ 1e-12 × (E_max - E_min)` is dropped, and the ratio is taken
/// between the surviving neighbours, so `ratios.len() = N - 2 - n_dropped`.
pub fn spacing_ratios(energies: &[f64]) -> Result<SpacingRatios> {
    if energies.len() < 3 {
        return Err(Error::param(
            "energies",
            format!("need at least 3 levels, got {}", energies.len()),
        ));
    }
    if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
        return Err(Error::param("energies", format!("level {i} is not finite")));
    }
    if let Some(i) = (1..energies.len()).find(|&i| energies[i] < energies[i - 1]) {
        return Err(Error::Unsorted(i));
    }
    let span = energies[energies.len() - 1] - energies[0];
    let eps = DEGENERACY_THRESHOLD * span;
    let mut kept = Vec::with_capacity(energies.len() - 1);
    let mut n_dropped = 0;
    for w in energies.windows(2) {
        let d = w[1] - w[0];
        if d > eps {
            kept.push(d);
        } else {
            n_dropped += 1;
        }
    }
    let ratios = kept.windows(2).map(|p| p[1] / p[0]).collect();
    Ok(SpacingRatios { ratios, n_dropped })
}

pub fn symmetrize(s: f64) -> f64 {
    s.min(1.0 / s)
}

/// Mean of `min(s, 1/s)`.
pub fn symmetrized_mean(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::Empty("spacing ratios"));
    }
    Ok(ratios.iter().map(|&s| symmetrize(s)).sum::<f64>() / ratios.len() as f64)
}

/// Mean symmetrized ratio of several realizations pooled together.
/// The result does not depend on the order of `sets`.
pub fn pooled_symmetrized_mean(sets: &[&[f64]]) -> Result<f64> {
    let mut all: Vec<f64> = sets.iter().flat_map(|s| s.iter().map(|&r| symmetrize(r))).collect();
    if all.is_empty() {
        return Err(Error::Empty("spacing ratios"));
    }
    all.sort_by(f64::total_cmp);
    Ok(all.iter().sum::<f64>() / all.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Poisson,
    Goe,
}

/// Exact ratio densities: `1/(1+s)²` and `27/8 (s+s²)/(1+s+s²)^{5/2}`.
pub fn reference_pdf(kind: ReferenceKind, s: f64) -> f64 {
    match kind {
        ReferenceKind::Poisson => 1.0 / (1.0 + s).powi(2),
        ReferenceKind::Goe => 27.0 / 8.0 * (s + s * s) / (1.0 + s + s * s).powf(2.5),
    }
}

pub fn reference_cdf(kind: ReferenceKind, s: f64) -> f64 {
    if s.is_infinite() {
        return 1.0;
    }
    match kind {
        ReferenceKind::Poisson => s / (1.0 + s),
        ReferenceKind::Goe => {
            let q = 1.0 + s + s * s;
            0.5 + (2.0 * s.powi(3) + 3.0 * s * s - 3.0 * s - 2.0) / (4.0 * q.powf(1.5))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub s_max: f64,
    pub bin_width: f64,
    pub density: Vec<f64>,
    /// Fraction of samples above `s_max`.
    pub overflow: f64,
    pub n_samples: usize,
}

impl Histogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.density.len())
            .map(|k| (k as f64 + 0.5) * self.bin_width)
            .collect()
    }

    /// `Σ density·width`, the fraction of samples inside `[0, s_max]`.
    pub fn retained(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    /// Bin-integrated reference with the same layout.
    pub fn reference(kind: ReferenceKind, n_bins: usize, s_max: f64) -> Self {
        let w = s_max / n_bins as f64;
        let density = (0..n_bins)
            .map(|k| (reference_cdf(kind, (k + 1) as f64 * w) - reference_cdf(kind, k as f64 * w)) / w)
            .collect();
        Histogram {
            s_max,
            bin_width: w,
            density,
            overflow: 1.0 - reference_cdf(kind, s_max),
            n_samples: 0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = TableWriter::new(&schema::HISTOGRAM);
        for (c, d) in self.bin_centers().iter().zip(&self.density) {
            w.row(&[fmt_f64(*c), fmt_f64(*d)]);
        }
        w.finish()
    }
}

/// Normalized histogram on `[0, s_max]`; values at `s_max` fall in the last bin.
pub fn empirical_pdf(values: &[f64], n_bins: usize, s_max: f64) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram input"));
    }
    if n_bins == 0 {
        return Err(Error::param("n_bins", "must be at least 1"));
    }
    if !(s_max > 0.0) {
        return Err(Error::param("s_max", "must be positive"));
    }
    let w = s_max / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut over = 0usize;
    for &v in values {
        if v > s_max {
            over += 1;
        } else {
            counts[((v / w) as usize).min(n_bins - 1)] += 1;
        }
    }
    let n = values.len() as f64;
    Ok(Histogram {
        s_max,
        bin_width: w,
        density: counts.iter().map(|&c| c as f64 / (n * w)).collect(),
        overflow: over as f64 / n,
        n_samples: values.len(),
    })
}

/// Total-variation distance between the binned sample and the bin-integrated
/// reference, with the mass above `s_max` as one extra bin.
pub fn distribution_distance(hist: &Histogram, kind: ReferenceKind) -> f64 {
    let n = hist.density.len();
    let reference = Histogram::reference(kind, n, hist.s_max);
    let inside: f64 = hist
        .density
        .iter()
        .zip(&reference.density)
        .map(|(a, b)| (a - b).abs() * hist.bin_width)
        .sum();
    0.5 * (inside + (hist.overflow - reference.overflow).abs())
}

/// Which levels of a spectrum enter the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    All,
    /// Half-open index range `[lo, hi)`.
    Index(usize, usize),
    /// Closed energy range.
    Energy(f64, f64),
}

impl Window {
    /// Index range `[lo, hi)` selected from an ascending spectrum.
    pub fn select(&self, energies: &[f64]) -> (usize, usize) {
        match *self {
            Window::All => (0, energies.len()),
            Window::Index(lo, hi) => {
                let hi = hi.min(energies.len());
                (lo.min(hi), hi)
            }
            Window::Energy(lo, hi) => {
                let a = energies.partition_point(|&e| e < lo);
                let b = energies.partition_point(|&e| e <= hi).max(a);
                (a, b)
            }
        }
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text == "all" {
            return Ok(Window::All);
        }
        let (kind, range) = text
            .split_once(':')
            .ok_or_else(|| format!("window `{text}` must be `all`, `index:LO..HI` or `energy:LO..HI`"))?;
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| format!("window range `{range}` must look like LO..HI"))?;
        match kind {
            "index" => Ok(Window::Index(
                lo.parse().map_err(|_| format!("bad index `{lo}`"))?,
                hi.parse().map_err(|_| format!("bad index `{hi}`"))?,
            )),
            "energy" => Ok(Window::Energy(
                lo.parse().map_err(|_| format!("bad energy `{lo}`"))?,
                hi.parse().map_err(|_| format!("bad energy `{hi}`"))?,
            )),
            _ => Err(format!("unknown window kind `{kind}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumStats {
    pub ratios: Vec<f64>,
    pub sym_ratios: Vec<f64>,
    pub mean_sym: f64,
    pub histogram: Histogram,
    pub window: (usize, usize),
    pub n_dropped: usize,
    pub tv_poisson: f64,
    pub tv_goe: f64,
}

impl SpectrumStats {
    pub fn n_levels(&self) -> usize {
        self.window.1 - self.window.0
    }

    pub fn summary_csv(&self) -> String {
        let mut w = TableWriter::new(&schema::STATS_SUMMARY);
        w.row(&[
            fmt_f64(self.mean_sym),
            self.n_levels().to_string(),
            self.ratios.len().to_string(),
            self.window.0.to_string(),
            self.window.1.to_string(),
            self.n_dropped.to_string(),
            fmt_f64(self.tv_poisson),
            fmt_f64(self.tv_goe),
            fmt_f64(self.histogram.overflow),
        ]);
        w.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramOptions {
    pub bins: usize,
    pub s_max: f64,
}

impl Default for HistogramOptions {
    fn default() -> Self {
        Self { bins: 40, s_max: 5.0 }
    }
}

/// Ratio statistics of the levels selected by `window`.
pub fn spectrum_stats(energies: &[f64], window: Window, hist: &HistogramOptions) -> Result<SpectrumStats> {
    let (lo, hi) = window.select(energies);
    if hi - lo < 3 {
        return Err(Error::param(
            "window",
            format!("selects {} levels; at least 3 are needed", hi - lo),
        ));
    }
    let sr = spacing_ratios(&energies[lo..hi])?;
    debug_assert_eq!(sr.ratios.len(), (hi - lo).saturating_sub(2 + sr.n_dropped));
    let sym: Vec<f64> = sr.ratios.iter().map(|&s| symmetrize(s)).collect();
    let mean_sym = symmetrized_mean(&sr.ratios)?;
    let histogram = empirical_pdf(&sr.ratios, hist.bins, hist.s_max)?;
    Ok(SpectrumStats {
        tv_poisson: distribution_distance(&histogram, ReferenceKind::Poisson),
        tv_goe: distribution_distance(&histogram, ReferenceKind::Goe),
        ratios: sr.ratios,
        sym_ratios: sym,
        mean_sym,
        histogram,
        window: (lo, hi),
        n_dropped: sr.n_dropped,
    })
}

/// Random spectra for validating the statistics.
pub mod sampling {
    use faer::{Mat, Side};

    use super::*;

    /// Cumulative sums of i.i.d. unit exponential spacings.
    pub fn poisson_levels<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
        let mut e = 0.0;
        (0..n)
            .map(|_| {
                let d: f64 = Exp1.sample(rng);
                e += d;
                e
            })
            .collect()
    }

    /// Ascending eigenvalues of `(G + Gᵀ)/2` with i.i.d. standard normal `G`.
    pub fn goe_spectrum<R: Rng>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let g = Mat::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        let h = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        Ok((0..n).map(|i| s[i]).collect())
    }

    /// The middle third of a spectrum.
    pub fn bulk_third(levels: &[f64]) -> &[f64] {
        let n = levels.len();
        &levels[n / 3..2 * n / 3]
    }
}

#[cfg(test)]
mod tests {
    use super::sampling::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ratio_examples() {
        assert_eq!(spacing_ratios(&[0.0, 1.0, 2.0, 3.0]).unwrap().ratios, vec![1.0, 1.0]);
        assert_eq!(spacing_ratios(&[0.0, 1.0, 3.0, 7.0]).unwrap().ratios, vec![2.0, 2.0]);
        let d = spacing_ratios(&[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.n_dropped, 1);
        assert_eq!(d.ratios, vec![1.0]);
        assert!(matches!(spacing_ratios(&[0.0, 2.0, 1.0]), Err(Error::Unsorted(2))));
        assert!(spacing_ratios(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn all_degenerate_levels() {
        let d = spacing_ratios(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(d.ratios.is_empty());
        assert_eq!(d.n_dropped, 3);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(symmetrized_mean(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(symmetrized_mean(&[2.0, 0.5]).unwrap(), 0.5);
        assert!(symmetrized_mean(&[]).is_err());
    }

    #[test]
    fn reference_values() {
        assert_eq!(reference_pdf(ReferenceKind::Poisson, 0.0), 1.0);
        assert_eq!(reference_pdf(ReferenceKind::Goe, 0.0), 0.0);
        let goe1 = 27.0 / (4.0 * 3.0f64.powf(2.5));
        assert!((reference_pdf(ReferenceKind::Goe, 1.0) - goe1).abs() < 1e-15);
        assert!((goe1 - 0.4330).abs() < 1e-4);
    }

    #[test]
    fn cdf_matches_pdf() {
        for kind in [ReferenceKind::Poisson, ReferenceKind::Goe] {
            assert_eq!(reference_cdf(kind, 0.0), 0.0);
            for s in [0.1, 0.7, 1.0, 2.5, 10.0] {
                let h = 1e-5;
                let num = (reference_cdf(kind, s + h) - reference_cdf(kind, s - h)) / (2.0 * h);
                assert!((num - reference_pdf(kind, s)).abs() < 1e-8, "{kind:?} {s}");
            }
        }
    }

    #[test]
    fn empirical_constant_data() {
        let h = empirical_pdf(&[1.0; 50], 10, 2.0).unwrap();
        let nonzero: Vec<usize> = (0..10).filter(|&k| h.density[k] != 0.0).collect();
        assert_eq!(nonzero, vec![5]);
        assert_eq!(h.density[5], 5.0);
        assert_eq!(h.overflow, 0.0);
        assert!((h.retained() - 1.0).abs() < 1e-15);
        let h = empirical_pdf(&[1.0, 3.0], 4, 2.0).unwrap();
        assert_eq!(h.overflow, 0.5);
        assert!((h.retained() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reference_against_itself() {
        for kind in [ReferenceKind::Poisson, ReferenceKind::Goe] {
            let h = Histogram::reference(kind, 40, 5.0);
            assert!(distribution_distance(&h, kind) < 1e-15);
        }
    }

    #[test]
    fn sampled_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let levels = poisson_levels(100_002, &mut rng);
        let r = spacing_ratios(&levels).unwrap().ratios;
        let h = empirical_pdf(&r, 40, 5.0).unwrap();
        assert!(distribution_distance(&h, ReferenceKind::Poisson) < 0.02);
        assert!(distribution_distance(&h, ReferenceKind::Goe) > 0.15);
    }

    #[test]
    fn windows() {
        let e = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(Window::All.select(&e), (0, 5));
        assert_eq!(Window::Index(1, 4).select(&e), (1, 4));
        assert_eq!(Window::Index(3, 10).select(&e), (3, 5));
        assert_eq!(Window::Energy(0.5, 3.0).select(&e), (1, 4));
        assert_eq!(Window::parse("index:2..7").unwrap(), Window::Index(2, 7));
        assert_eq!(Window::parse("energy:1.5..2").unwrap(), Window::Energy(1.5, 2.0));
        assert!(Window::parse("bogus").is_err());
        assert!(spectrum_stats(&e, Window::Index(0, 2), &HistogramOptions::default()).is_err());
    }

    #[test]
    fn stats_bookkeeping() {
        let e = [0.0, 1.0, 1.0, 3.0, 4.0, 4.5, 7.0];
        let s = spectrum_stats(&e, Window::All, &HistogramOptions::default()).unwrap();
        assert_eq!(s.ratios.len(), e.len() - 2 - s.n_dropped);
        assert!(s.sym_ratios.iter().all(|&x| x > 0.0 && x <= 1.0));
    }
}
