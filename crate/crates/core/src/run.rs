//! One solve: potential, eigenpairs and diagnostics for a single
//! `(L, disorder, seed)` combination.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigen::{solve_lowest_with, EigenpairSet, HamiltonianOperator, Retention, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid2D, ScalarField, MIN_POINTS_PER_AXIS};
use crate::observables::{de_broglie, diagnose_set, diagnostics_csv, DiagnosticsOptions, StateDiagnostics};
use crate::potential::{
    build_lattice_potential_with, render_disorder, sample_disorder_with, total_potential, Convention, DisorderParams,
    DisorderRealization, FermiParams,
};

/// Largest spacing allowed by `h ≤ min(1.5 d, σ/4, λ/8)`, with `λ` the de
/// Broglie wavelength at `excess` above the mean potential.
pub fn grid_rule_spacing(fermi: &FermiParams, width: Option<f64>, excess: f64) -> f64 {
    let mut h = 1.5 * fermi.d;
    if let Some(w) = width.filter(|w| *w > 0.0) {
        h = h.min(w / 4.0);
    }
    if let Some(lambda) = de_broglie(excess, 0.0) {
        h = h.min(lambda / 8.0);
    }
    h
}

/// Points per axis that satisfy the grid rule on the `L·a` domain.
pub fn grid_rule_points(fermi: &FermiParams, width: Option<f64>, excess: f64) -> usize {
    let h = grid_rule_spacing(fermi, width, excess);
    let n = (fermi.side_length() / h).ceil() as usize;
    n.saturating_sub(1).max(MIN_POINTS_PER_AXIS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub fermi: FermiParams,
    pub convention: Convention,
    /// `None` for the clean lattice.
    pub disorder: Option<DisorderParams>,
    pub seed: u64,
    pub points_per_axis: usize,
    pub solver: SolverOptions,
    pub diagnostics: DiagnosticsOptions,
}

impl RunSpec {
    pub fn clean(&self) -> RunSpec {
        RunSpec {
            disorder: None,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> Result<Grid2D> {
        self.fermi.validate()?;
        make_grid(self.fermi.side_length(), self.points_per_axis)
    }

    pub fn realization(&self) -> Result<Option<DisorderRealization>> {
        self.disorder
            .as_ref()
            .map(|d| sample_disorder_with(d, self.seed, self.fermi.side_length()))
            .transpose()
    }

    /// `V_ext + V_imp` on the run grid.
    pub fn potential(&self) -> Result<(ScalarField, Option<DisorderRealization>)> {
        let grid = self.grid()?;
        let v_ext = build_lattice_potential_with(&self.fermi, &grid, self.convention)?;
        let real = self.realization()?;
        let v = match &real {
            Some(r) => total_potential(&v_ext, &render_disorder(r, &grid)?)?,
            None => v_ext,
        };
        Ok((v, real))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub potential: ScalarField,
    pub realization: Option<DisorderRealization>,
    pub set: EigenpairSet,
    pub diagnostics: Vec<StateDiagnostics>,
}

pub fn execute(spec: &RunSpec) -> Result<RunOutput> {
    let (potential, realization) = spec.potential()?;
    let op = HamiltonianOperator::new(potential);
    let set = solve_lowest_with(&op, &spec.solver)?;
    let diagnostics = diagnose_set(&set, op.potential(), &spec.diagnostics)?;
    Ok(RunOutput {
        potential: op.potential().clone(),
        realization,
        set,
        diagnostics,
    })
}

impl RunOutput {
    /// Writes `energies.csv`, `diagnostics.csv`, `disorder.txt`, `potential.llf`
    /// and the retained states.
    pub fn save(&self, dir: &Path, retain: &Retention) -> Result<()> {
        self.set.save(dir, retain)?;
        let path = dir.join("diagnostics.csv");
        std::fs::write(&path, diagnostics_csv("continuum", &self.diagnostics)).map_err(|e| Error::io(&path, e))?;
        if let Some(r) = &self.realization {
            r.write(&dir.join("disorder.txt"))?;
        }
        self.potential.write(&dir.join("potential.llf"))
    }
}
