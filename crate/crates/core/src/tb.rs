//! Deep-well reduction to the nearest-neighbour Anderson model on an `L×L`
//! lattice with open boundaries.

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::eigen::{solve_lowest_with, HamiltonianOperator, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::potential::{build_lattice_potential_with, Convention, DisorderRealization, FermiParams};
use crate::schema::{self, fmt_f64, TableWriter};

/// Largest number of sites accepted by the dense diagonalization.
pub const MAX_SITES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TBModel {
    pub size: usize,
    /// `ε_i` in row-major order, site `(i, j)` at `j * size + i`.
    pub onsite: Vec<f64>,
    pub hopping: f64,
    /// Bumps found inside each well's radius.
    pub bumps_per_site: Vec<usize>,
    pub warnings: Vec<String>,
}

impl TBModel {
    pub fn new(size: usize, onsite: Vec<f64>, hopping: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("size", "lattice must have at least one site"));
        }
        if onsite.len() != size * size {
            return Err(Error::param(
                "onsite",
                format!("expected {} values, got {}", size * size, onsite.len()),
            ));
        }
        if !hopping.is_finite() || onsite.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("onsite", "values must be finite"));
        }
        Ok(Self {
            size,
            bumps_per_site: vec![0; onsite.len()],
            onsite,
            hopping,
            warnings: Vec::new(),
        })
    }

    pub fn clean(size: usize, e0: f64, t: f64) -> Result<Self> {
        Self::new(size, vec![e0; size * size], t)
    }

    /// Onsite energies drawn uniformly from `[e0 - w/2, e0 + w/2]`.
    pub fn box_disorder<R: rand::Rng>(size: usize, e0: f64, t: f64, w: f64, rng: &mut R) -> Result<Self> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::param("w", "box width must be finite and non-negative"));
        }
        let onsite = (0..size * size).map(|_| e0 + w * (rng.random::<f64>() - 0.5)).collect();
        Self::new(size, onsite, t)
    }

    pub fn sites(&self) -> usize {
        self.size * self.size
    }

    pub fn site(&self, i: usize, j: usize) -> usize {
        j * self.size + i
    }

    pub fn hamiltonian(&self) -> Mat<f64> {
        let l = self.size;
        let mut h = Mat::<f64>::zeros(l * l, l * l);
        for j in 0..l {
            for i in 0..l {
                let p = self.site(i, j);
                h[(p, p)] = self.onsite[p];
                if i + 1 < l {
                    h[(p, p + 1)] = self.hopping;
                    h[(p + 1, p)] = self.hopping;
                }
                if j + 1 < l {
                    h[(p, p + l)] = self.hopping;
                    h[(p + l, p)] = self.hopping;
                }
            }
        }
        h
    }

    pub fn onsite_csv(&self) -> String {
        let mut w = TableWriter::new(&schema::TB_ONSITE);
        for j in 0..self.size {
            for i in 0..self.size {
                let p = self.site(i, j);
                w.row(&[
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(self.onsite[p]),
                    self.bumps_per_site[p].to_string(),
                ]);
            }
        }
        w.finish()
    }
}

/// `ε_i = e0 + Σ A` over the bumps within `r0` of well `i`'s centre; bumps
/// outside every well are ignored. More than one bump in a well is reported
/// in `warnings`.
pub fn reduce_to_tb(fermi: &FermiParams, realization: &DisorderRealization, e0: f64, t: f64) -> Result<TBModel> {
    fermi.validate()?;
    let side = fermi.side_length();
    if (realization.side_length - side).abs() > 1e-9 * side {
        return Err(Error::GridMismatch(format!(
            "disorder side {} does not match lattice side {side}",
            realization.side_length
        )));
    }
    let mut model = TBModel::clean(fermi.wells, e0, t)?;
    for b in &realization.bumps {
        let i = ((b.position[0] / fermi.a).floor().max(0.0) as usize).min(fermi.wells - 1);
        let j = ((b.position[1] / fermi.a).floor().max(0.0) as usize).min(fermi.wells - 1);
        let c = fermi.well_center(i, j);
        if (b.position[0] - c[0]).hypot(b.position[1] - c[1]) <= fermi.r0 {
            let p = model.site(i, j);
            model.onsite[p] += b.amplitude;
            model.bumps_per_site[p] += 1;
        }
    }
    for j in 0..fermi.wells {
        for i in 0..fermi.wells {
            let n = model.bumps_per_site[model.site(i, j)];
            if n > 1 {
                model
                    .warnings
                    .push(format!("well ({i}, {j}) holds {n} bumps; their amplitudes were added"));
            }
        }
    }
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct TBSpectrum {
    pub energies: Vec<f64>,
    /// Column `n` is the normalized site-basis eigenvector of `energies[n]`.
    pub vectors: Mat<f64>,
}

impl TBSpectrum {
    pub fn vector(&self, n: usize) -> Vec<f64> {
        self.vectors.col_as_slice(n).to_vec()
    }

    pub fn iprs(&self) -> Vec<f64> {
        (0..self.energies.len())
            .map(|n| tb_ipr(self.vectors.col_as_slice(n)))
            .collect()
    }
}

/// Full ordered spectrum by dense diagonalization.
pub fn tb_spectrum(model: &TBModel) -> Result<TBSpectrum> {
    let n = model.sites();
    if n > MAX_SITES {
        return Err(Error::param(
            "size",
            format!("{n} sites exceed the dense cap of {MAX_SITES}"),
        ));
    }
    let evd = model
        .hamiltonian()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let mut vectors = evd.U().to_owned();
    for c in 0..n {
        let col = vectors.col_as_slice_mut(c);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(TBSpectrum {
        energies: (0..n).map(|i| s[i]).collect(),
        vectors,
    })
}

/// `Σ|c_i|⁴` of a normalized site vector.
pub fn tb_ipr(state: &[f64]) -> f64 {
    state.iter().map(|c| c.powi(4)).sum()
}

/// `e0 + 2t (cos(πk/(L+1)) + cos(πm/(L+1)))` for `k, m = 1..=L`, ascending.
pub fn clean_tb_spectrum(size: usize, e0: f64, t: f64) -> Vec<f64> {
    let c = |k: usize| (PI * k as f64 / (size + 1) as f64).cos();
    let mut e: Vec<f64> = (1..=size)
        .flat_map(|k| (1..=size).map(move |m| e0 + 2.0 * t * (c(k) + c(m))))
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Onsite energy and hopping extracted from clean continuum solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TBParameters {
    pub e0: f64,
    pub t: f64,
}

/// `e0` is the ground state of a single well. `t` comes from the 2×2 lattice,
/// whose four lowest levels are `e0 + 2t, e0, e0, e0 - 2t`, so
/// `t = -(E₃ - E₀)/4`.
pub fn estimate_tb_parameters(fermi: &FermiParams, points_per_cell: usize, tol: f64) -> Result<TBParameters> {
    let solve = |wells: usize, n_states: usize| -> Result<Vec<f64>> {
        let p = FermiParams { wells, ..*fermi };
        let g = make_grid(p.side_length(), points_per_cell * wells)?;
        let v = build_lattice_potential_with(&p, &g, Convention::WellsDown)?;
        let set = solve_lowest_with(
            &HamiltonianOperator::new(v),
            &SolverOptions {
                n_states,
                tol,
                block_size: 4,
                ..SolverOptions::default()
            },
        )?;
        Ok(set.energies)
    };
    let single = solve(1, 1)?;
    let plaquette = solve(2, 4)?;
    Ok(TBParameters {
        e0: single[0],
        t: -(plaquette[3] - plaquette[0]) / 4.0,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param("b", "series lengths differ"));
    }
    if a.len() < 2 {
        return Err(Error::Empty("rank correlation input"));
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::param("a", "rank correlation of a constant series"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            r[i] = avg;
        }
        k = e + 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Bump, DisorderParams};

    fn realization(bumps: Vec<Bump>, side: f64) -> DisorderRealization {
        DisorderRealization {
            bumps,
            seed: 0,
            params: DisorderParams::new(0.0, 0.0, 0.2),
            side_length: side,
        }
    }

    fn bump(x: f64, y: f64, a: f64) -> Bump {
        Bump {
            position: [x, y],
            amplitude: a,
            width: 0.2,
        }
    }

    #[test]
    fn clean_three_by_three() {
        let m = TBModel::clean(3, 0.0, -1.0).unwrap();
        let s = tb_spectrum(&m).unwrap();
        let r2 = 2.0f64.sqrt();
        let exact = [-2.0 * r2, -r2, -r2, 0.0, 0.0, 0.0, r2, r2, 2.0 * r2];
        for (a, b) in s.energies.iter().zip(exact) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in s.energies.iter().zip(clean_tb_spectrum(3, 0.0, -1.0)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_site_and_zero_hopping() {
        let m = TBModel::new(1, vec![2.5], -1.0).unwrap();
        assert_eq!(tb_spectrum(&m).unwrap().energies, vec![2.5]);
        let m = TBModel::new(2, vec![3.0, 1.0, 4.0, 2.0], 0.0).unwrap();
        let s = tb_spectrum(&m).unwrap();
        assert_eq!(s.energies, vec![1.0, 2.0, 3.0, 4.0]);
        for n in 0..4 {
            assert!((tb_ipr(&s.vector(n)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ipr_examples() {
        assert_eq!(tb_ipr(&[0.0, 1.0, 0.0]), 1.0);
        assert!((tb_ipr(&[0.5; 4]) - 0.25).abs() < 1e-15);
        let h = 0.5f64.sqrt();
        assert!((tb_ipr(&[h, h, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reduction_rules() {
        let f = FermiParams::with_wells(5);
        let m = reduce_to_tb(&f, &realization(vec![], 10.0), 3.0, -0.1).unwrap();
        assert!(m.onsite.iter().all(|&e| e == 3.0));

        let c = f.well_center(2, 3);
        let m = reduce_to_tb(&f, &realization(vec![bump(c[0] + 0.1, c[1], 1.5)], 10.0), 3.0, -0.1).unwrap();
        for j in 0..5 {
            for i in 0..5 {
                let want = if (i, j) == (2, 3) { 4.5 } else { 3.0 };
                assert_eq!(m.onsite[m.site(i, j)], want);
            }
        }
        assert!(m.warnings.is_empty());

        let two = vec![bump(c[0], c[1], 1.0), bump(c[0] - 0.3, c[1] + 0.2, 0.5)];
        let m = reduce_to_tb(&f, &realization(two, 10.0), 3.0, -0.1).unwrap();
        assert_eq!(m.onsite[m.site(2, 3)], 4.5);
        assert_eq!(m.warnings.len(), 1);

        // on the barrier between wells
        let m = reduce_to_tb(&f, &realization(vec![bump(2.0, 2.0, 9.0)], 10.0), 3.0, -0.1).unwrap();
        assert!(m.onsite.iter().all(|&e| e == 3.0));

        assert!(reduce_to_tb(&f, &realization(vec![], 8.0), 3.0, -0.1).is_err());
    }

    #[test]
    fn size_cap() {
        let m = TBModel::clean(101, 0.0, -1.0).unwrap();
        assert!(tb_spectrum(&m).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }
}
