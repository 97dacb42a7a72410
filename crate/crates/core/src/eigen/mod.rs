//! Finite-difference Hamiltonian `H = -½∇² + V` with hard walls, and its lowest eigenpairs.

mod lanczos;

use std::path::Path;

use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField, Wavefunction};
use crate::schema::{self, fmt_f64, TableWriter};

pub use lanczos::solve_lowest_with;

/// Upper bound on requested states at desk scale.
pub const MAX_STATES: usize = 1200;
/// Upper bound on grid points per axis at desk scale.
pub const MAX_POINTS_PER_AXIS: usize = 768;

#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    potential: ScalarField,
    /// `½ / h²`, the kinetic stencil weight.
    kinetic: f64,
}

impl HamiltonianOperator {
    pub fn new(potential: ScalarField) -> Self {
        let h = potential.grid().spacing();
        Self {
            kinetic: 0.5 / (h * h),
            potential,
        }
    }

    /// Free particle in the box.
    pub fn free(grid: Grid2D) -> Self {
        Self::new(ScalarField::zeros(grid))
    }

    pub fn grid(&self) -> &Grid2D {
        self.potential.grid()
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn apply(&self, psi: &Wavefunction) -> Result<Wavefunction> {
        self.grid().ensure_same(psi.grid())?;
        let mut out = vec![0.0; psi.values().len()];
        self.apply_raw(psi.values(), &mut out);
        Wavefunction::new(*self.grid(), out)
    }

    /// `out = H x` on raw row-major vectors.
    pub fn apply_raw(&self, x: &[f64], out: &mut [f64]) {
        apply_kinetic_raw(self.grid().points_per_axis(), self.kinetic, x, out);
        for ((o, v), xi) in out.iter_mut().zip(self.potential.values()).zip(x) {
            *o += v * xi;
        }
    }

    /// Lower triangle of `H - shift·I` in compressed-column form.
    pub(crate) fn shifted_lower(&self, shift: f64) -> Result<SparseColMat<usize, f64>> {
        let n = self.grid().points_per_axis();
        let c = self.kinetic;
        let mut triplets = Vec::with_capacity(3 * n * n);
        for iy in 0..n {
            for ix in 0..n {
                let p = iy * n + ix;
                triplets.push(Triplet::new(p, p, 4.0 * c + self.potential.values()[p] - shift));
                if ix + 1 < n {
                    triplets.push(Triplet::new(p + 1, p, -c));
                }
                if iy + 1 < n {
                    triplets.push(Triplet::new(p + n, p, -c));
                }
            }
        }
        SparseColMat::try_new_from_triplets(n * n, n * n, &triplets).map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// `out = -½ Δ_h x` with zero values outside the grid.
pub(crate) fn apply_kinetic_raw(n: usize, weight: f64, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), n * n);
    for iy in 0..n {
        let row = iy * n;
        for ix in 0..n {
            let p = row + ix;
            let mut nb = 0.0;
            if ix > 0 {
                nb += x[p - 1];
            }
            if ix + 1 < n {
                nb += x[p + 1];
            }
            if iy > 0 {
                nb += x[p - n];
            }
            if iy + 1 < n {
                nb += x[p + n];
            }
            out[p] = weight * (4.0 * x[p] - nb);
        }
    }
}

pub fn apply_hamiltonian(op: &HamiltonianOperator, psi: &Wavefunction) -> Result<Wavefunction> {
    op.apply(psi)
}

/// `‖Hψ - eψ‖` under grid quadrature.
pub fn residual_norm(op: &HamiltonianOperator, psi: &Wavefunction, e: f64) -> Result<f64> {
    let hpsi = op.apply(psi)?;
    let h = psi.grid().spacing();
    let sum: f64 = hpsi
        .values()
        .iter()
        .zip(psi.values())
        .map(|(a, b)| (a - e * b).powi(2))
        .sum();
    Ok(sum.sqrt() * h)
}

/// Exact eigenvalue of the 5-point operator for box mode `(k, m)` with `V = 0`.
pub fn box_mode_energy_discrete(grid: &Grid2D, k: usize, m: usize) -> f64 {
    let h = grid.spacing();
    let theta = |j: usize| std::f64::consts::PI * j as f64 / (grid.points_per_axis() as f64 + 1.0);
    (2.0 - theta(k).cos() - theta(m).cos()) / (h * h)
}

/// Continuum box energy `π²(k² + m²) / 2W²`.
pub fn box_mode_energy_continuum(side: f64, k: usize, m: usize) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    pi2 * ((k * k + m * m) as f64) / (2.0 * side * side)
}

/// Sampled box mode `sin(πkx/W) sin(πmy/W)` (not normalized).
pub fn box_mode(grid: &Grid2D, k: usize, m: usize) -> Wavefunction {
    let w = grid.side_length();
    let o = grid.origin();
    let pi = std::f64::consts::PI;
    Wavefunction::from_fn(*grid, |[x, y]| {
        (pi * k as f64 * (x - o[0]) / w).sin() * (pi * m as f64 * (y - o[1]) / w).sin()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub n_states: usize,
    /// Residual tolerance on `‖Hψ - Eψ‖`.
    pub tol: f64,
    pub block_size: usize,
    /// Largest Krylov basis (in vectors) before giving up; 0 picks a size from `n_states`.
    pub max_basis: usize,
    /// Seed of the random starting block.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_states: 20,
            tol: 1e-6,
            block_size: 8,
            max_basis: 0,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub method: String,
    pub block_steps: usize,
    pub basis_size: usize,
    pub tol: f64,
    pub shift: f64,
    pub seed: u64,
    /// Largest deviation of the normalized Ritz vectors from orthonormality.
    pub orthogonality: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct EigenpairSet {
    pub energies: Vec<f64>,
    pub states: Vec<Wavefunction>,
    pub residuals: Vec<f64>,
    pub meta: SolverMeta,
}

impl EigenpairSet {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `index,energy,residual` table with round-trip float formatting.
    pub fn energies_csv(&self) -> String {
        let mut w = TableWriter::new(&schema::ENERGIES);
        for (i, (e, r)) in self.energies.iter().zip(&self.residuals).enumerate() {
            w.row(&[i.to_string(), fmt_f64(*e), fmt_f64(*r)]);
        }
        w.finish()
    }

    /// Writes `energies.csv` and one binary field per state selected by `retain`.
    pub fn save(&self, dir: &Path, retain: &Retention) -> Result<Vec<usize>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("energies.csv");
        std::fs::write(&path, self.energies_csv()).map_err(|e| Error::io(&path, e))?;
        let kept: Vec<usize> = (0..self.len()).filter(|&i| retain.keeps(i, self.energies[i])).collect();
        if !kept.is_empty() {
            let states = dir.join("states");
            std::fs::create_dir_all(&states).map_err(|e| Error::io(&states, e))?;
            for &i in &kept {
                self.states[i].write(&states.join(state_file_name(i)))?;
            }
        }
        Ok(kept)
    }
}

pub fn state_file_name(index: usize) -> String {
    format!("state_{index:05}.llf")
}

/// Reads `index,energy,residual` rows.
pub fn read_energies_csv(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    let table = schema::read_table_of(path, &schema::ENERGIES)?;
    table
        .rows
        .iter()
        .map(|r| {
            let index = r[0]
                .parse()
                .map_err(|_| Error::format(path, format!("negative index `{}`", r[0])))?;
            Ok((index, r[1].parse().unwrap(), r[2].parse().unwrap()))
        })
        .collect()
}

/// Which eigenstates get their fields written to disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    #[default]
    All,
    None,
    Every(usize),
    EnergyWindow([f64; 2]),
}

impl Retention {
    pub fn keeps(&self, index: usize, energy: f64) -> bool {
        match self {
            Retention::All => true,
            Retention::None => false,
            Retention::Every(k) => *k > 0 && index.is_multiple_of(*k),
            Retention::EnergyWindow([lo, hi]) => energy >= *lo && energy <= *hi,
        }
    }
}

/// Lowest `n_states` eigenpairs with every residual below `tol`.
pub fn solve_lowest(op: &HamiltonianOperator, n_states: usize, tol: f64) -> Result<EigenpairSet> {
    solve_lowest_with(
        op,
        &SolverOptions {
            n_states,
            tol,
            ..SolverOptions::default()
        },
    )
}
