//! Python bindings for the `scarloc` crate.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scarloc::classify::{label_states, CleanBaseline};
use scarloc::config::{AnalysisSection, ExperimentConfig};
use scarloc::eigen::{solve_lowest_with, EigenpairSet, HamiltonianOperator, SolverOptions};
use scarloc::grid::{make_grid, Grid2D, ScalarField};
use scarloc::observables::{diagnose_set, StateDiagnostics};
use scarloc::potential::{build_lattice_potential, FermiParams};
use scarloc::spectral::{spectrum_stats, HistogramOptions, Window};
use scarloc::sweep::{run_sweep, SweepControl};
use scarloc::tb::{tb_spectrum, TBModel};
use scarloc::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parameter { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyGrid(Grid2D);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(side_length: f64, points_per_axis: usize) -> PyResult<Self> {
        make_grid(side_length, points_per_axis).map(Self).map_err(py_err)
    }

    #[getter]
    fn side_length(&self) -> f64 {
        self.0.side_length()
    }

    #[getter]
    fn points_per_axis(&self) -> usize {
        self.0.points_per_axis()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn coords(&self) -> Vec<f64> {
        let n = self.0.points_per_axis();
        (0..n).map(|i| self.0.coord(i, 0)[0]).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(side_length={}, points_per_axis={})",
            self.0.side_length(),
            self.0.points_per_axis()
        )
    }
}

/// A real field on a grid, stored row-major with `x` fastest.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyField(ScalarField);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        ScalarField::new(grid.0, values).map(Self).map_err(py_err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let n = self.0.grid().points_per_axis();
        (n, n)
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn min(&self) -> f64 {
        self.0.min()
    }

    fn max(&self) -> f64 {
        self.0.max()
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

/// Clean lattice of Fermi wells.
#[pyfunction]
#[pyo3(signature = (wells, points_per_axis, r0 = 0.8, d = 0.03, v0 = 20.0, a = 2.0))]
fn lattice_potential(wells: usize, points_per_axis: usize, r0: f64, d: f64, v0: f64, a: f64) -> PyResult<PyField> {
    let p = FermiParams { r0, d, v0, a, wells };
    p.validate().map_err(py_err)?;
    let g = make_grid(p.side_length(), points_per_axis).map_err(py_err)?;
    build_lattice_potential(&p, &g).map(PyField).map_err(py_err)
}

#[pyclass(name = "Eigenpairs", frozen)]
pub struct PyEigenpairs(EigenpairSet);

#[pymethods]
impl PyEigenpairs {
    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.0.energies.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.0.residuals.clone()
    }

    fn state(&self, index: usize) -> PyResult<Vec<f64>> {
        self.0
            .states
            .get(index)
            .map(|s| s.values().to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("no state {index}")))
    }

    fn meta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = &self.0.meta;
        let d = PyDict::new(py);
        d.set_item("method", &m.method)?;
        d.set_item("block_steps", m.block_steps)?;
        d.set_item("basis_size", m.basis_size)?;
        d.set_item("tol", m.tol)?;
        d.set_item("shift", m.shift)?;
        d.set_item("orthogonality", m.orthogonality)?;
        d.set_item("restarts", m.restarts)?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Lowest `n_states` eigenpairs of `-½∇² + V` with Dirichlet walls.
#[pyfunction]
#[pyo3(signature = (potential, n_states, tol = 1e-8, block_size = 8, seed = 0x5eed))]
fn solve_lowest(
    py: Python<'_>,
    potential: &PyField,
    n_states: usize,
    tol: f64,
    block_size: usize,
    seed: u64,
) -> PyResult<PyEigenpairs> {
    let op = HamiltonianOperator::new(potential.0.clone());
    let opts = SolverOptions {
        n_states,
        tol,
        block_size,
        seed,
        ..SolverOptions::default()
    };
    py.detach(|| solve_lowest_with(&op, &opts))
        .map(PyEigenpairs)
        .map_err(py_err)
}

fn diagnostics_dict<'py>(py: Python<'py>, d: &StateDiagnostics) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("index", d.index)?;
    out.set_item("energy", d.energy)?;
    out.set_item("e_norm", d.e_norm)?;
    out.set_item("ipr2", d.ipr2)?;
    let q = PyDict::new(py);
    for &(k, v) in &d.ipr_q {
        q.set_item(k, v)?;
    }
    out.set_item("ipr_q", q)?;
    out.set_item("t_exp", d.t_exp)?;
    out.set_item("v_exp", d.v_exp)?;
    out.set_item("tv_ratio", d.tv_ratio)?;
    out.set_item("lambda_db", d.lambda_db)?;
    out.set_item("xi_tail", d.xi_tail)?;
    out.set_item("tail_fit_quality", d.tail_fit_quality)?;
    out.set_item("consistency", d.consistency)?;
    out.set_item("anisotropy", d.anisotropy)?;
    out.set_item("scar_score", d.scar_score)?;
    out.set_item("label", d.label.as_deref())?;
    Ok(out)
}

/// Per-state diagnostics. With `clean`, states are labelled against the
/// clean system's diagnostics on the same grid.
#[pyfunction]
#[pyo3(signature = (pairs, potential, clean = None))]
fn diagnose<'py>(
    py: Python<'py>,
    pairs: &PyEigenpairs,
    potential: &PyField,
    clean: Option<(PyRef<'py, PyEigenpairs>, PyRef<'py, PyField>)>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let analysis = AnalysisSection::default();
    let opts = analysis.diagnostics();
    let mut rows = diagnose_set(&pairs.0, &potential.0, &opts).map_err(py_err)?;
    if let Some((cp, cv)) = clean {
        let th = &analysis.classify;
        let base = diagnose_set(&cp.0, &cv.0, &opts).map_err(py_err)?;
        let baseline =
            CleanBaseline::from_diagnostics(&base, th.baseline_bins, th.baseline_percentile).map_err(py_err)?;
        label_states(&mut rows, &baseline, th, potential.0.grid().side_length()).map_err(py_err)?;
    }
    rows.iter().map(|d| diagnostics_dict(py, d)).collect()
}

/// Spacing-ratio statistics of a spectrum.
#[pyfunction]
#[pyo3(signature = (levels, window = "all", bins = 40, s_max = 5.0))]
fn spacing_stats<'py>(
    py: Python<'py>,
    levels: Vec<f64>,
    window: &str,
    bins: usize,
    s_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut levels = levels;
    levels.sort_by(f64::total_cmp);
    let window = Window::parse(window).map_err(PyValueError::new_err)?;
    let st = spectrum_stats(&levels, window, &HistogramOptions { bins, s_max }).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mean_sym", st.mean_sym)?;
    d.set_item("ratios", st.ratios)?;
    d.set_item("n_levels", st.window.1 - st.window.0)?;
    d.set_item("n_dropped", st.n_dropped)?;
    d.set_item("tv_poisson", st.tv_poisson)?;
    d.set_item("tv_goe", st.tv_goe)?;
    d.set_item("density", st.histogram.density.clone())?;
    d.set_item("bin_centers", st.histogram.bin_centers())?;
    Ok(d)
}

/// Square tight-binding lattice with onsite energies uniform in `e0 ± w/2`.
#[pyfunction]
#[pyo3(signature = (size, e0, t, w = 0.0, seed = 0))]
fn tb_spectrum_box<'py>(
    py: Python<'py>,
    size: usize,
    e0: f64,
    t: f64,
    w: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let model = TBModel::box_disorder(size, e0, t, w, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(py_err)?;
    let spec = tb_spectrum(&model).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("iprs", spec.iprs())?;
    d.set_item("energies", spec.energies)?;
    Ok(d)
}

#[pyclass(name = "Config", frozen)]
pub struct PyConfig(ExperimentConfig);

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ExperimentConfig::parse(text).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ExperimentConfig::load(&path).map(Self).map_err(py_err)
    }

    fn canonical(&self) -> String {
        self.0.canonical()
    }

    fn hash(&self) -> String {
        self.0.hash()
    }

    /// Potential of one run; defaults to the configured size, strength and first seed.
    #[pyo3(signature = (wells = None, strength = None, seed = None))]
    fn potential(&self, wells: Option<usize>, strength: Option<f64>, seed: Option<u64>) -> PyResult<PyField> {
        let wells = wells.unwrap_or(self.0.potential.wells);
        let strength = strength.unwrap_or(self.0.disorder.strength);
        let seed = seed.or_else(|| self.0.disorder.seeds.first().copied()).unwrap_or(0);
        let spec = self.0.run_spec(wells, strength, seed, self.0.solver.n_states);
        spec.potential().map(|(v, _)| PyField(v)).map_err(py_err)
    }

    /// Runs `solve` under `out` and returns the run directory.
    #[pyo3(signature = (out, force = false))]
    fn solve(&self, py: Python<'_>, out: PathBuf, force: bool) -> PyResult<PathBuf> {
        py.detach(|| scarloc::experiment::solve(&self.0, &out, force))
            .map(|o| o.dir().to_path_buf())
            .map_err(py_err)
    }

    #[pyo3(signature = (out, force = false))]
    fn tb(&self, py: Python<'_>, out: PathBuf, force: bool) -> PyResult<PathBuf> {
        py.detach(|| scarloc::experiment::tb(&self.0, &out, force))
            .map(|o| o.dir().to_path_buf())
            .map_err(py_err)
    }

    /// Runs or resumes a sweep in `root`; returns the cell counts.
    #[pyo3(signature = (root, max_cells = None, threads = 0))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        root: PathBuf,
        max_cells: Option<usize>,
        threads: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let control = SweepControl {
            max_new_cells: max_cells,
            threads,
            ..SweepControl::default()
        };
        let rep = py
            .detach(|| run_sweep(&self.0, &root, &control, &|_| {}))
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("computed", rep.computed)?;
        d.set_item("skipped", rep.skipped)?;
        d.set_item("failed", rep.failed)?;
        d.set_item("pending", rep.pending)?;
        Ok(d)
    }
}

#[pymodule]
fn pyscarloc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyEigenpairs>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(lattice_potential, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lowest, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(spacing_stats, m)?)?;
    m.add_function(wrap_pyfunction!(tb_spectrum_box, m)?)?;
    m.add("POISSON_MEAN_SYM", scarloc::spectral::poisson_mean_sym())?;
    m.add("GOE_MEAN_SYM", scarloc::spectral::goe_surmise_mean_sym())?;
    Ok(())
}
