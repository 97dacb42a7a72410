//! Per-state diagnostics: participation ratios, energy partition, radial
//! profiles and exponential tail fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::{apply_kinetic_raw, EigenpairSet};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, Wavefunction};
use crate::schema::{self, fmt_f64, fmt_opt, TableWriter};

/// `∫ |ψ|^{2q}` under grid quadrature. `psi` is assumed normalized.
pub fn ipr(psi: &Wavefunction, q: f64) -> Result<f64> {
    if !(q >= 2.0) {
        return Err(Error::param("q", format!("must be at least 2, got {q}")));
    }
    let sum: f64 = psi.values().iter().map(|v| (v * v).powf(q)).sum();
    Ok(sum * psi.grid().cell_area())
}

/// `(e - e_min) / (e_max - e_min)`.
pub fn normalized_energy(e: f64, e_min: f64, e_max: f64) -> Result<f64> {
    if !(e_max > e_min) {
        return Err(Error::param(
            "e_max",
            format!("energy range [{e_min}, {e_max}] is degenerate"),
        ));
    }
    let span = e_max - e_min;
    let slack = 1e-12 * span.max(e_max.abs());
    if e < e_min - slack || e > e_max + slack {
        return Err(Error::param("e", format!("{e} lies outside [{e_min}, {e_max}]")));
    }
    Ok(((e - e_min) / span).clamp(0.0, 1.0))
}

/// `⟨ψ, -½Δψ⟩` with the same stencil as the Hamiltonian.
pub fn kinetic_expectation(psi: &Wavefunction) -> f64 {
    let g = psi.grid();
    let h = g.spacing();
    let mut t = vec![0.0; g.len()];
    apply_kinetic_raw(g.points_per_axis(), 0.5 / (h * h), psi.values(), &mut t);
    t.iter().zip(psi.values()).map(|(a, b)| a * b).sum::<f64>() * h * h
}

pub fn potential_expectation(psi: &Wavefunction, v: &ScalarField) -> Result<f64> {
    psi.grid().ensure_same(v.grid())?;
    let sum: f64 = psi.values().iter().zip(v.values()).map(|(p, v)| v * p * p).sum();
    Ok(sum * psi.grid().cell_area())
}

/// `2π / √(2(E - ⟨V⟩))`, absent in the classically forbidden regime.
pub fn de_broglie(e: f64, v_mean: f64) -> Option<f64> {
    (e > v_mean).then(|| 2.0 * PI / (2.0 * (e - v_mean)).sqrt())
}

/// Probability centroid of `|ψ|²`.
pub fn centroid(psi: &Wavefunction) -> Result<[f64; 2]> {
    let g = psi.grid();
    let (mut m, mut x, mut y) = (0.0, 0.0, 0.0);
    for (p, r) in g.points() {
        let w = psi.values()[p].powi(2);
        m += w;
        x += w * r[0];
        y += w * r[1];
    }
    if m == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok([x / m, y / m])
}

/// `1 - λ_min/λ_max` of the second-moment tensor of `|ψ|²` about its centroid.
pub fn inertia_anisotropy(psi: &Wavefunction) -> Result<f64> {
    let c = centroid(psi)?;
    let g = psi.grid();
    let (mut m, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0);
    for (p, r) in g.points() {
        let w = psi.values()[p].powi(2);
        let dx = r[0] - c[0];
        let dy = r[1] - c[1];
        m += w;
        xx += w * dx * dx;
        yy += w * dy * dy;
        xy += w * dx * dy;
    }
    let (xx, yy, xy) = (xx / m, yy / m, xy / m);
    let mean = 0.5 * (xx + yy);
    let dev = (0.25 * (xx - yy).powi(2) + xy * xy).sqrt();
    let (lo, hi) = (mean - dev, mean + dev);
    if hi <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - lo.max(0.0) / hi).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub center: [f64; 2],
    pub bin_width: f64,
    /// Mean distance of the points in each bin (bin midpoint when empty).
    pub r: Vec<f64>,
    /// Mean `|ψ|²` per bin (0 when empty).
    pub density: Vec<f64>,
    pub count: Vec<usize>,
}

impl RadialProfile {
    pub fn empty_bins(&self) -> Vec<usize> {
        (0..self.count.len()).filter(|&k| self.count[k] == 0).collect()
    }

    /// `Σ 2π r_k Δr ρ_k`, close to 1 for normalized states well inside the domain.
    pub fn shell_mass(&self) -> f64 {
        self.r
            .iter()
            .zip(&self.density)
            .map(|(r, d)| 2.0 * PI * r * self.bin_width * d)
            .sum()
    }
}

/// Angular average of `|ψ|²` in equal-width annuli out to the farthest domain corner.
/// `center` defaults to the probability centroid.
pub fn radial_profile(psi: &Wavefunction, center: Option<[f64; 2]>, n_bins: usize) -> Result<RadialProfile> {
    if n_bins < 8 {
        return Err(Error::param("n_bins", format!("need at least 8 bins, got {n_bins}")));
    }
    let g = psi.grid();
    let center = match center {
        Some(c) => c,
        None => centroid(psi)?,
    };
    let o = g.origin();
    let s = g.side_length();
    let r_max = [[o[0], o[1]], [o[0] + s, o[1]], [o[0], o[1] + s], [o[0] + s, o[1] + s]]
        .iter()
        .map(|q| (q[0] - center[0]).hypot(q[1] - center[1]))
        .fold(0.0, f64::max);
    let width = r_max / n_bins as f64;
    let mut sum_r = vec![0.0; n_bins];
    let mut sum_d = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (p, q) in g.points() {
        let r = (q[0] - center[0]).hypot(q[1] - center[1]);
        let k = ((r / width) as usize).min(n_bins - 1);
        sum_r[k] += r;
        sum_d[k] += psi.values()[p].powi(2);
        count[k] += 1;
    }
    let r = (0..n_bins)
        .map(|k| {
            if count[k] > 0 {
                sum_r[k] / count[k] as f64
            } else {
                (k as f64 + 0.5) * width
            }
        })
        .collect();
    let density = (0..n_bins)
        .map(|k| if count[k] > 0 { sum_d[k] / count[k] as f64 } else { 0.0 })
        .collect();
    Ok(RadialProfile {
        center,
        bin_width: width,
        r,
        density,
        count,
    })
}

/// Automatic selection of the linear window of `ln|ψ|²` versus `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailPolicy {
    pub min_bins: usize,
    /// Largest allowed `|m₁ - m₂|/|m|` between the slopes of the two window halves.
    pub max_slope_variation: f64,
    pub min_r2: f64,
    pub density_floor: f64,
    /// Longest accepted decay length; `None` uses the domain side.
    pub max_xi: Option<f64>,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self {
            min_bins: 8,
            max_slope_variation: 0.15,
            min_r2: 0.98,
            density_floor: 1e-30,
            max_xi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    /// Decay length of the density, `|ψ|² ∝ exp(-r/ξ)`.
    pub xi_tail: f64,
    pub slope: f64,
    /// `ln C` of the fitted `C exp(-r/ξ)`.
    pub intercept: f64,
    pub r_range: (f64, f64),
    pub bins: (usize, usize),
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRejection {
    TooFewBins,
    NoWindow,
    TooLong,
}

impl TailRejection {
    pub fn code(&self) -> &'static str {
        match self {
            TailRejection::TooFewBins => "too_few_bins",
            TailRejection::NoWindow => "no_window",
            TailRejection::TooLong => "xi_exceeds_guard",
        }
    }
}

impl std::fmt::Display for TailRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

struct Prefix {
    n: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    xx: Vec<f64>,
    xy: Vec<f64>,
    yy: Vec<f64>,
}

impl Prefix {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let mut p = Prefix {
            n: vec![0.0],
            x: vec![0.0],
            y: vec![0.0],
            xx: vec![0.0],
            xy: vec![0.0],
            yy: vec![0.0],
        };
        for (a, b) in x.iter().zip(y) {
            p.n.push(p.n.last().unwrap() + 1.0);
            p.x.push(p.x.last().unwrap() + a);
            p.y.push(p.y.last().unwrap() + b);
            p.xx.push(p.xx.last().unwrap() + a * a);
            p.xy.push(p.xy.last().unwrap() + a * b);
            p.yy.push(p.yy.last().unwrap() + b * b);
        }
        p
    }

    /// Least squares on `[i, j)`: slope, intercept, R².
    fn fit(&self, i: usize, j: usize) -> Option<(f64, f64, f64)> {
        let d = |v: &[f64]| v[j] - v[i];
        let n = d(&self.n);
        let (sx, sy) = (d(&self.x), d(&self.y));
        let sxx = d(&self.xx) - sx * sx / n;
        let sxy = d(&self.xy) - sx * sy / n;
        let syy = d(&self.yy) - sy * sy / n;
        if !(sxx > 0.0) || !(syy > 0.0) {
            return None;
        }
        let slope = sxy / sxx;
        let intercept = (sy - slope * sx) / n;
        let r2 = (sxy * sxy / (sxx * syy)).min(1.0);
        Some((slope, intercept, r2))
    }
}

/// Fits `ln|ψ|² = ln C - r/ξ` over the longest qualifying run of bins past the
/// profile maximum.
pub fn fit_tail(
    profile: &RadialProfile,
    policy: &TailPolicy,
    side_length: f64,
) -> std::result::Result<TailFit, TailRejection> {
    let n = profile.density.len();
    let peak = (0..n)
        .max_by(|&a, &b| profile.density[a].total_cmp(&profile.density[b]))
        .unwrap_or(0);
    let usable = |k: usize| profile.count[k] > 0 && profile.density[k] > policy.density_floor;
    let min_bins = policy.min_bins.max(4);

    let mut best: Option<(usize, usize, f64, f64, f64)> = None;
    let mut any_run = false;
    let mut start = peak;
    while start < n {
        if !usable(start) {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < n && usable(end) {
            end += 1;
        }
        if end - start >= min_bins {
            any_run = true;
            let x = &profile.r[start..end];
            let y: Vec<f64> = profile.density[start..end].iter().map(|d| d.ln()).collect();
            let pre = Prefix::new(x, &y);
            let len = end - start;
            for i in 0..len {
                for j in (i + min_bins)..=len {
                    let w = j - i;
                    if let Some((bw, ..)) = best.map(|b| (b.1 - b.0, b.4)) {
                        if w < bw {
                            continue;
                        }
                    }
                    let Some((m, c, r2)) = pre.fit(i, j) else { continue };
                    if m >= 0.0 || r2 < policy.min_r2 {
                        continue;
                    }
                    let mid = i + w / 2;
                    let (Some((m1, ..)), Some((m2, ..))) = (pre.fit(i, mid), pre.fit(mid, j)) else {
                        continue;
                    };
                    if (m1 - m2).abs() / m.abs() >= policy.max_slope_variation {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bi, bj, .., br2)) => w > bj - bi || (w == bj - bi && r2 > br2),
                    };
                    if better {
                        best = Some((start + i, start + j, m, c, r2));
                    }
                }
            }
        }
        start = end;
    }
    let Some((i, j, slope, intercept, r2)) = best else {
        return Err(if any_run {
            TailRejection::NoWindow
        } else {
            TailRejection::TooFewBins
        });
    };
    let xi = -1.0 / slope;
    if xi > policy.max_xi.unwrap_or(side_length) {
        return Err(TailRejection::TooLong);
    }
    Ok(TailFit {
        xi_tail: xi,
        slope,
        intercept,
        r_range: (profile.r[i], profile.r[j - 1]),
        bins: (i, j),
        r2,
    })
}

/// `IPR₂ · 8π ξ²`, which is 1 for a normalized `exp(-r/ξ)/(2πξ²)` density.
pub fn ipr_xi_consistency(ipr2: f64, xi: f64) -> f64 {
    ipr2 * 8.0 * PI * xi * xi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    pub q_values: Vec<f64>,
    pub radial_bins: usize,
    pub tail: TailPolicy,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            q_values: vec![2.0, 3.0, 4.0],
            radial_bins: 64,
            tail: TailPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDiagnostics {
    pub index: usize,
    pub energy: f64,
    pub e_norm: f64,
    pub residual: Option<f64>,
    pub ipr2: f64,
    /// `(q, IPR_q)` for every configured order.
    pub ipr_q: Vec<(f64, f64)>,
    pub t_exp: Option<f64>,
    pub v_exp: Option<f64>,
    pub tv_ratio: Option<f64>,
    pub lambda_db: Option<f64>,
    pub xi_tail: Option<f64>,
    pub tail_fit_quality: Option<f64>,
    pub tail_note: Option<String>,
    pub consistency: Option<f64>,
    pub centroid: Option<[f64; 2]>,
    pub anisotropy: Option<f64>,
    pub tv_excess: Option<f64>,
    pub scar_score: Option<f64>,
    pub label: Option<String>,
}

impl StateDiagnostics {
    /// A lattice-model row: only energy and IPR are meaningful.
    pub fn lattice(index: usize, energy: f64, e_norm: f64, ipr2: f64) -> Self {
        Self {
            index,
            energy,
            e_norm,
            residual: None,
            ipr2,
            ipr_q: Vec::new(),
            t_exp: None,
            v_exp: None,
            tv_ratio: None,
            lambda_db: None,
            xi_tail: None,
            tail_fit_quality: None,
            tail_note: None,
            consistency: None,
            centroid: None,
            anisotropy: None,
            tv_excess: None,
            scar_score: None,
            label: None,
        }
    }

    pub fn tail_ok(&self) -> bool {
        self.xi_tail.is_some()
    }
}

/// Full diagnostics of one normalized state; `e_range` is `(E_min, E_max)` of the run.
pub fn diagnose_state(
    index: usize,
    psi: &Wavefunction,
    energy: f64,
    residual: Option<f64>,
    v: &ScalarField,
    e_range: (f64, f64),
    opts: &DiagnosticsOptions,
) -> Result<StateDiagnostics> {
    let e_norm = if e_range.1 > e_range.0 {
        normalized_energy(energy, e_range.0, e_range.1)?
    } else {
        0.0
    };
    let ipr2 = ipr(psi, 2.0)?;
    let ipr_q = opts
        .q_values
        .iter()
        .map(|&q| Ok((q, ipr(psi, q)?)))
        .collect::<Result<Vec<_>>>()?;
    let t = kinetic_expectation(psi);
    let vm = potential_expectation(psi, v)?;
    let profile = radial_profile(psi, None, opts.radial_bins)?;
    let side = psi.grid().side_length();
    let (xi_tail, tail_fit_quality, tail_note) = match fit_tail(&profile, &opts.tail, side) {
        Ok(fit) => (Some(fit.xi_tail), Some(fit.r2), None),
        Err(reason) => (None, None, Some(reason.code().to_string())),
    };
    Ok(StateDiagnostics {
        index,
        energy,
        e_norm,
        residual,
        ipr2,
        ipr_q,
        t_exp: Some(t),
        v_exp: Some(vm),
        tv_ratio: (vm != 0.0).then(|| t / vm),
        lambda_db: de_broglie(energy, vm),
        xi_tail,
        tail_fit_quality,
        tail_note,
        consistency: xi_tail.map(|xi| ipr_xi_consistency(ipr2, xi)),
        centroid: Some(profile.center),
        anisotropy: Some(inertia_anisotropy(psi)?),
        tv_excess: None,
        scar_score: None,
        label: None,
    })
}

/// Diagnostics for every state of a solve, with `Ẽ` relative to this run.
pub fn diagnose_set(set: &EigenpairSet, v: &ScalarField, opts: &DiagnosticsOptions) -> Result<Vec<StateDiagnostics>> {
    let Some(&e_min) = set.energies.first() else {
        return Ok(Vec::new());
    };
    let e_max = *set.energies.last().unwrap();
    set.states
        .iter()
        .enumerate()
        .map(|(i, psi)| diagnose_state(i, psi, set.energies[i], Some(set.residuals[i]), v, (e_min, e_max), opts))
        .collect()
}

fn q_column(q: f64) -> String {
    format!("ipr_q{q}")
}

/// One row per state; absent values are empty cells.
pub fn diagnostics_csv(model: &str, rows: &[StateDiagnostics]) -> String {
    let qs: Vec<f64> = rows
        .first()
        .map(|r| r.ipr_q.iter().map(|p| p.0).collect())
        .unwrap_or_default();
    let mut header = schema::DIAGNOSTICS.header();
    header.extend(qs.iter().map(|&q| q_column(q)));
    let mut w = TableWriter::with_header(&schema::DIAGNOSTICS, &header);
    for d in rows {
        let mut cells = vec![
            model.to_string(),
            d.index.to_string(),
            fmt_f64(d.energy),
            fmt_f64(d.e_norm),
            fmt_opt(d.residual),
            fmt_f64(d.ipr2),
            fmt_opt(d.t_exp),
            fmt_opt(d.v_exp),
            fmt_opt(d.tv_ratio),
            fmt_opt(d.lambda_db),
            fmt_opt(d.xi_tail),
            fmt_opt(d.tail_fit_quality),
            d.tail_note.clone().unwrap_or_default(),
            fmt_opt(d.consistency),
            fmt_opt(d.centroid.map(|c| c[0])),
            fmt_opt(d.centroid.map(|c| c[1])),
            fmt_opt(d.anisotropy),
            fmt_opt(d.tv_excess),
            fmt_opt(d.scar_score),
            d.label.clone().unwrap_or_default(),
        ];
        for &q in &qs {
            cells.push(fmt_opt(d.ipr_q.iter().find(|p| p.0 == q).map(|p| p.1)));
        }
        w.row(&cells);
    }
    w.finish()
}

/// Parses a diagnostics table written by [`diagnostics_csv`].
pub fn read_diagnostics_csv(path: &std::path::Path) -> Result<Vec<StateDiagnostics>> {
    let table = schema::read_table_of(path, &schema::DIAGNOSTICS)?;
    let fixed = schema::DIAGNOSTICS.columns.len();
    let qs: Vec<f64> = table.header[fixed..]
        .iter()
        .map(|h| h.trim_start_matches("ipr_q").parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(path, "bad ipr_q column name"))?;
    let opt = |s: &str| s.parse::<f64>().ok();
    let text = |s: &str| (!s.is_empty()).then(|| s.to_string());
    table
        .rows
        .iter()
        .map(|r| {
            let index = r[1]
                .parse()
                .map_err(|_| Error::format(path, format!("bad index `{}`", r[1])))?;
            let centroid = match (opt(&r[14]), opt(&r[15])) {
                (Some(x), Some(y)) => Some([x, y]),
                _ => None,
            };
            Ok(StateDiagnostics {
                index,
                energy: r[2].parse().unwrap(),
                e_norm: r[3].parse().unwrap(),
                residual: opt(&r[4]),
                ipr2: r[5].parse().unwrap(),
                ipr_q: qs
                    .iter()
                    .zip(&r[fixed..])
                    .filter_map(|(&q, v)| opt(v).map(|v| (q, v)))
                    .collect(),
                t_exp: opt(&r[6]),
                v_exp: opt(&r[7]),
                tv_ratio: opt(&r[8]),
                lambda_db: opt(&r[9]),
                xi_tail: opt(&r[10]),
                tail_fit_quality: opt(&r[11]),
                tail_note: text(&r[12]),
                consistency: opt(&r[13]),
                centroid,
                anisotropy: opt(&r[16]),
                tv_excess: opt(&r[17]),
                scar_score: opt(&r[18]),
                label: text(&r[19]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{box_mode, box_mode_energy_continuum};
    use crate::grid::{make_grid, normalize};

    fn exp_state(xi: f64) -> Wavefunction {
        let side = 24.0 * xi;
        let g = make_grid(side, 479).unwrap();
        let c = 1.0 / (2.0 * PI * xi * xi);
        let mid = side / 2.0;
        Wavefunction::from_fn(g, |r| {
            let d = (r[0] - mid).hypot(r[1] - mid);
            (c * (-d / xi).exp()).sqrt()
        })
    }

    #[test]
    fn ipr_of_uniform_state() {
        let g = make_grid(10.0, 99).unwrap();
        let psi = normalize(&Wavefunction::from_fn(g, |_| 1.0)).unwrap();
        let v = ipr(&psi, 2.0).unwrap();
        let area = g.len() as f64 * g.cell_area();
        assert!((v - 1.0 / area).abs() < 1e-12 / area);
        assert!(ipr(&psi, 1.5).is_err());
    }

    #[test]
    fn ipr_of_box_ground_state() {
        let w = 10.0;
        let g = make_grid(w, 255).unwrap();
        let psi = normalize(&box_mode(&g, 1, 1)).unwrap();
        let v = ipr(&psi, 2.0).unwrap();
        let exact = 9.0 / (4.0 * w * w);
        assert!((v / exact - 1.0).abs() < 5e-3);
        // ∫ sin⁶ over a period is 5W/16 per axis
        let exact3 = (2.0 / w).powi(6) * (5.0 * w / 16.0).powi(2);
        let v3 = ipr(&psi, 3.0).unwrap();
        assert!((v3 / exact3 - 1.0).abs() < 5e-3, "{v3} vs {exact3}");
    }

    #[test]
    fn normalized_energy_examples() {
        assert_eq!(normalized_energy(5.0, 0.0, 20.0).unwrap(), 0.25);
        assert_eq!(normalized_energy(0.0, 0.0, 20.0).unwrap(), 0.0);
        assert_eq!(normalized_energy(20.0, 0.0, 20.0).unwrap(), 1.0);
        assert!(normalized_energy(1.0, 2.0, 2.0).is_err());
        assert!(normalized_energy(30.0, 0.0, 20.0).is_err());
    }

    #[test]
    fn kinetic_of_box_mode() {
        let w = 10.0;
        let g = make_grid(w, 255).unwrap();
        for (k, m) in [(1, 1), (2, 3), (4, 1)] {
            let psi = normalize(&box_mode(&g, k, m)).unwrap();
            let t = kinetic_expectation(&psi);
            let exact = box_mode_energy_continuum(w, k, m);
            assert!((t / exact - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn kinetic_is_positive() {
        let g = make_grid(4.0, 40).unwrap();
        let psi = normalize(&Wavefunction::from_fn(g, |r| {
            if (r[0] - 2.0).hypot(r[1] - 2.0) < 1.0 {
                1.0
            } else {
                0.0
            }
        }))
        .unwrap();
        assert!(kinetic_expectation(&psi) > 0.0);
    }

    #[test]
    fn potential_expectation_of_constant() {
        let g = make_grid(4.0, 40).unwrap();
        let psi = normalize(&box_mode(&g, 2, 1)).unwrap();
        let v = ScalarField::from_fn(g, |_| 3.5).unwrap();
        assert!((potential_expectation(&psi, &v).unwrap() - 3.5).abs() < 1e-12);
        assert_eq!(potential_expectation(&psi, &ScalarField::zeros(g)).unwrap(), 0.0);
        let other = ScalarField::zeros(make_grid(4.0, 41).unwrap());
        assert!(potential_expectation(&psi, &other).is_err());
    }

    #[test]
    fn de_broglie_examples() {
        assert!((de_broglie(1.0 + 2.0 * PI * PI, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((de_broglie(22.0, 20.0).unwrap() - PI).abs() < 1e-14);
        assert_eq!(de_broglie(20.0, 20.0), None);
        assert_eq!(de_broglie(19.0, 20.0), None);
    }

    #[test]
    fn gaussian_profile_matches_analytic() {
        let g = make_grid(10.0, 255).unwrap();
        let w = 1.2;
        let psi = normalize(&Wavefunction::from_fn(g, |r| {
            (-((r[0] - 5.0).powi(2) + (r[1] - 5.0).powi(2)) / (2.0 * w * w)).exp()
        }))
        .unwrap();
        let prof = radial_profile(&psi, None, 64).unwrap();
        assert!((prof.center[0] - 5.0).abs() < 1e-10 && (prof.center[1] - 5.0).abs() < 1e-10);
        let peak = 1.0 / (PI * w * w);
        for k in 0..prof.r.len() {
            let r = prof.r[k];
            if r > 3.0 * w || prof.count[k] == 0 {
                continue;
            }
            let exact = peak * (-r * r / (w * w)).exp();
            assert!((prof.density[k] - exact).abs() < 0.02 * peak, "bin {k}");
        }
        assert!((prof.shell_mass() - 1.0).abs() < 0.05);
    }

    #[test]
    fn uniform_profile_is_flat_and_has_no_tail() {
        let g = make_grid(10.0, 99).unwrap();
        let psi = normalize(&Wavefunction::from_fn(g, |_| 1.0)).unwrap();
        let prof = radial_profile(&psi, None, 32).unwrap();
        let first = prof.density[0];
        assert!(prof
            .density
            .iter()
            .zip(&prof.count)
            .filter(|p| *p.1 > 0)
            .all(|(d, _)| (d - first).abs() < 1e-12));
        assert!(fit_tail(&prof, &TailPolicy::default(), 10.0).is_err());
        assert!(radial_profile(&psi, None, 4).is_err());
    }

    #[test]
    fn synthetic_exponential_tails() {
        for xi in [0.2, 0.5, 1.0, 2.0] {
            let psi = exp_state(xi);
            let prof = radial_profile(&psi, None, 64).unwrap();
            let fit = fit_tail(&prof, &TailPolicy::default(), psi.grid().side_length()).unwrap();
            assert!((fit.xi_tail / xi - 1.0).abs() < 0.02, "xi {xi}: {}", fit.xi_tail);
            let ln_c = (1.0 / (2.0 * PI * xi * xi)).ln();
            assert!(
                (fit.intercept - ln_c).abs() < 0.05 * ln_c.abs().max(1.0),
                "xi {xi}: {} vs {ln_c}",
                fit.intercept
            );
            let ratio = ipr_xi_consistency(ipr(&psi, 2.0).unwrap(), fit.xi_tail);
            assert!((0.95..=1.05).contains(&ratio), "xi {xi}: ratio {ratio}");
        }
    }

    #[test]
    fn consistency_algebra() {
        let ipr2 = 1.0 / (8.0 * PI * 4.0);
        assert!((ipr_xi_consistency(ipr2, 2.0) - 1.0).abs() < 1e-15);
        let area = 100.0;
        assert!(ipr_xi_consistency(1.0 / area, 10.0) > 20.0);
    }

    #[test]
    fn anisotropy_of_gaussians() {
        let g = make_grid(20.0, 199).unwrap();
        let iso = Wavefunction::from_fn(g, |r| (-((r[0] - 10.0).powi(2) + (r[1] - 10.0).powi(2)) / 2.0).exp());
        assert!(inertia_anisotropy(&iso).unwrap() < 1e-10);
        let stripe = Wavefunction::from_fn(g, |r| {
            (-((r[0] - 10.0).powi(2) / (2.0 * 3.0f64.powi(2)) + (r[1] - 10.0).powi(2) / (2.0 * 0.3f64.powi(2)))).exp()
        });
        assert!(inertia_anisotropy(&stripe).unwrap() >= 0.9);
    }
}
