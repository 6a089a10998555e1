//! Python bindings: grids, parameters, states, stepping, integration,
//! config-file runs, resume and the self-check suites.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bvoigt::diagnostics::{record, DiagConfig, DiagRecord};
use bvoigt::experiments::ic_catalog;
use bvoigt::io::RunConfig;
use bvoigt::timestepping::{integrate as integrate_core, Scheme, StepperConfig, TimeStep, Trajectory};
use bvoigt::{driver, models, spectral, verify, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::UnsupportedDimension(_) | Error::UnsupportedConfig(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(spectral::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, n: usize) -> PyResult<Self> {
        spectral::Grid::new(dim, n).map(PyGrid).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    /// Largest retained wavenumber per axis.
    #[getter]
    fn cutoff(&self) -> i64 {
        self.0.cutoff()
    }

    fn __repr__(&self) -> String {
        format!("Grid(dim={}, n={})", self.0.dim(), self.0.n())
    }
}

#[derive(FromPyObject)]
enum Viscosity {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

#[pyclass(name = "ModelParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams(models::ModelParams);

#[pymethods]
impl PyParams {
    /// `nu` is one value for every axis or one value per axis.
    #[new]
    #[pyo3(signature = (dim, nu=Viscosity::Uniform(0.0), kappa=0.0, alpha=0.0))]
    fn new(dim: usize, nu: Viscosity, kappa: f64, alpha: f64) -> PyResult<Self> {
        let mut p = models::ModelParams::isotropic(dim, 0.0, kappa, alpha);
        p.nu = match nu {
            Viscosity::Uniform(v) => vec![v; dim],
            Viscosity::PerAxis(v) => v,
        };
        p.validate().map_err(to_py)?;
        Ok(PyParams(p))
    }

    #[getter]
    fn nu(&self) -> Vec<f64> {
        self.0.nu.clone()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(nu={:?}, kappa={}, alpha={})",
            self.0.nu, self.0.kappa, self.0.alpha
        )
    }
}

#[pyclass(name = "State", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState(models::SimState);

#[pymethods]
impl PyState {
    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }

    /// Grid samples of each velocity component, row-major.
    fn velocity(&self) -> Vec<Vec<f64>> {
        self.0
            .u
            .to_physical()
            .into_iter()
            .map(|c| c.into_values())
            .collect()
    }

    /// Grid samples of the scalar, row-major.
    fn theta(&self) -> Vec<f64> {
        self.0.theta.to_physical().into_values()
    }

    /// Every monitored functional at this state.
    fn diagnostics<'py>(&self, py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyDict>> {
        let p_grid = DiagConfig::default().p_grid;
        record_dict(py, &p_grid, &record(&self.0, &params.0, &p_grid))
    }
}

fn record_dict<'py>(py: Python<'py>, p_grid: &[f64], r: &DiagRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in DiagRecord::column_names(p_grid).into_iter().zip(r.to_row()) {
        d.set_item(k, v)?;
    }
    Ok(d)
}

fn trajectory_records<'py>(py: Python<'py>, p_grid: &[f64], traj: &Trajectory) -> PyResult<Vec<Bound<'py, PyDict>>> {
    traj.records().map(|r| record_dict(py, p_grid, r)).collect()
}

/// Builds a named initial condition (see `IC_NAMES`).
#[pyfunction]
#[pyo3(signature = (name, grid, amplitude=1.0, theta_amplitude=1.0, seed=0))]
fn initial_condition(name: &str, grid: &PyGrid, amplitude: f64, theta_amplitude: f64, seed: u64) -> PyResult<PyState> {
    let (u, theta) = ic_catalog(name, &grid.0, amplitude, theta_amplitude, seed).map_err(to_py)?;
    models::SimState::new(u, theta, 0.0).map(PyState).map_err(to_py)
}

/// One step of size `dt` with the integrating-factor RK4 scheme.
#[pyfunction]
fn step(state: &PyState, params: &PyParams, dt: f64) -> PyResult<PyState> {
    bvoigt::timestepping::step(&state.0, &params.0, dt).map(PyState).map_err(to_py)
}

/// Integrates to `t_end`; returns `(final_state, records)`. A fixed `dt`
/// overrides the adaptive CFL step.
#[pyfunction]
#[pyo3(signature = (state, params, t_end, dt=None, cfl=0.5, dt_max=1e-2, output_every=10, scheme="ifrk4"))]
#[allow(clippy::too_many_arguments)]
fn integrate<'py>(
    py: Python<'py>,
    state: &PyState,
    params: &PyParams,
    t_end: f64,
    dt: Option<f64>,
    cfl: f64,
    dt_max: f64,
    output_every: u64,
    scheme: &str,
) -> PyResult<(PyState, Vec<Bound<'py, PyDict>>)> {
    let scheme = Scheme::parse(scheme).ok_or_else(|| PyValueError::new_err(format!("unknown scheme {scheme:?}")))?;
    let config = StepperConfig {
        scheme,
        step: dt.map_or(TimeStep::Adaptive { cfl, dt_max }, TimeStep::Fixed),
        t_end,
        output_every,
        keep_fields: true,
        ..Default::default()
    };
    let diag = DiagConfig::default();
    let traj = integrate_core(state.0.clone(), &params.0, &config, &diag).map_err(|f| to_py(f.error))?;
    let last = traj.fields.last().cloned().unwrap_or_else(|| state.0.clone());
    Ok((PyState(last), trajectory_records(py, &diag.p_grid, &traj)?))
}

/// Runs a configuration file the way `bvoigt run` does; returns the records.
#[pyfunction]
#[pyo3(signature = (config, output=None))]
fn run_config<'py>(py: Python<'py>, config: PathBuf, output: Option<PathBuf>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = RunConfig::load(&config).map_err(to_py)?;
    let traj = driver::run(&cfg, output.as_deref()).map_err(to_py)?;
    trajectory_records(py, &cfg.diag.p_grid, &traj)
}

/// Continues a snapshot to `t_end` the way `bvoigt resume` does.
#[pyfunction]
#[pyo3(signature = (snapshot, t_end, config=None, output=None))]
fn resume<'py>(
    py: Python<'py>,
    snapshot: PathBuf,
    t_end: f64,
    config: Option<PathBuf>,
    output: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let path = config.unwrap_or_else(|| driver::default_resume_config(&snapshot));
    let cfg = RunConfig::load(&path).map_err(to_py)?;
    let traj = driver::resume(&snapshot, t_end, &cfg, output.as_deref()).map_err(to_py)?;
    trajectory_records(py, &cfg.diag.p_grid, &traj)
}

/// Runs the self-check suites; returns `(suite, check, value, limit, passed)` rows.
#[pyfunction]
fn verify_all() -> PyResult<Vec<(String, String, f64, f64, bool)>> {
    let rows = verify::run_all().map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.suite, r.check, r.value, r.limit, r.passed))
        .collect())
}

#[pymodule]
fn bvoigt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyState>()?;
    m.add("IC_NAMES", bvoigt::experiments::IC_NAMES.to_vec())?;
    m.add_function(wrap_pyfunction!(initial_condition, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(resume, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    Ok(())
}
