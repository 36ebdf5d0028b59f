//! Python bindings: load a configuration and a structural model, build the
//! solvers and run a simulation from a short script.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use aerocouple::cli::{load_case, summary_line};
use aerocouple::coupling::{self, RunResult};
use aerocouple::model_io::{
    self, format_history, format_iteration_log, history_header, parse_config, parse_structural_model,
    CouplingConfig, StructuralModel,
};

create_exception!(aerocouple, AerocoupleError, PyException, "Base class of every engine error.");
create_exception!(aerocouple, ParseError, AerocoupleError, "Malformed input file.");
create_exception!(aerocouple, ConfigError, AerocoupleError, "Invalid configuration.");
create_exception!(aerocouple, ModelError, AerocoupleError, "Invalid model or interface cloud.");
create_exception!(aerocouple, ConvergenceError, AerocoupleError, "A solver loop did not converge.");

/// Maps an engine error to the matching Python exception, keeping the
/// diagnostic text verbatim.
pub fn to_py(e: aerocouple::Error) -> PyErr {
    use aerocouple::Error as E;
    let msg = e.to_string();
    match e {
        E::Parse { .. } => ParseError::new_err(msg),
        E::Config { .. } => ConfigError::new_err(msg),
        E::InvalidModel(_) | E::Degenerate(_) | E::SizeMismatch { .. } => ModelError::new_err(msg),
        E::NonConvergence { .. } => ConvergenceError::new_err(msg),
        _ => AerocoupleError::new_err(msg),
    }
}

fn read(path: &PathBuf) -> PyResult<String> {
    std::fs::read_to_string(path).map_err(|e| to_py(aerocouple::Error::io(path, e)))
}

#[pyclass(name = "Config", module = "aerocouple", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    pub inner: CouplingConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses configuration text.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse_config(text).map(|inner| PyConfig { inner }).map_err(to_py)
    }

    /// Applies one `KEY = value` assignment.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.keyword()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn __repr__(&self) -> String {
        format!("Config(mode={}, dt={}, n_steps={})", self.inner.mode.keyword(), self.inner.dt, self.inner.n_steps)
    }
}

#[pyclass(name = "Model", module = "aerocouple", from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    pub inner: StructuralModel,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse_structural_model(text).map(|inner| PyModel { inner }).map_err(to_py)
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies.clone()
    }
}

/// Structural solver, fluid solver and interface maps of one case. Not
/// thread-safe.
#[pyclass(name = "Solvers", module = "aerocouple", unsendable)]
pub struct PySolvers {
    pub inner: coupling::Solvers,
}

#[pymethods]
impl PySolvers {
    #[getter]
    fn fluid(&self) -> &'static str {
        self.inner.aero.name()
    }

    #[getter]
    fn n_fluid_points(&self) -> usize {
        self.inner.aero.positions().len()
    }

    #[getter]
    fn map_condition(&self) -> f64 {
        self.inner.transfer.displacement_map().condition_estimate()
    }
}

/// Simulation history with columns addressed by name (`time`, `q_1`,
/// `qd_1`, `f_1`, ...).
#[pyclass(name = "History", module = "aerocouple", frozen)]
pub struct PyHistory {
    pub inner: RunResult,
}

#[pymethods]
impl PyHistory {
    #[getter]
    fn columns(&self) -> Vec<String> {
        history_header(self.inner.n_modes).split(',').map(str::to_string).collect()
    }

    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let n = self.inner.n_modes;
        let idx = self
            .columns()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| pyo3::exceptions::PyKeyError::new_err(name.to_string()))?;
        Ok(self
            .inner
            .history
            .iter()
            .map(|r| match idx {
                0 => r.time,
                i if i <= n => r.q[i - 1],
                i if i <= 2 * n => r.qd[i - n - 1],
                i => r.forces[i - 2 * n - 1],
            })
            .collect())
    }

    fn __getitem__(&self, name: &str) -> PyResult<Vec<f64>> {
        self.column(name)
    }

    fn __len__(&self) -> usize {
        self.inner.history.len()
    }

    #[getter]
    fn final_q(&self) -> Vec<f64> {
        self.inner.final_q().map(|q| q.iter().copied().collect()).unwrap_or_default()
    }

    #[getter]
    fn fsi_iterations(&self) -> usize {
        self.inner.iterations.len()
    }

    /// `(time, lift, moment)` rows of section models.
    #[getter]
    fn section_loads(&self) -> Vec<(f64, f64, f64)> {
        self.inner.section_loads.iter().map(|l| (l[0], l[1], l[2])).collect()
    }

    /// History CSV, byte-identical to the command-line output.
    fn to_csv(&self) -> PyResult<String> {
        format_history(self.inner.n_modes, &self.inner.history).map_err(to_py)
    }

    fn iteration_log(&self) -> String {
        format_iteration_log(&self.inner.iterations)
    }

    fn summary(&self) -> String {
        summary_line(&self.inner)
    }
}

#[pyfunction]
fn load_config(path: PathBuf) -> PyResult<PyConfig> {
    let inner = parse_config(&read(&path)?).map_err(to_py)?;
    Ok(PyConfig { inner })
}

#[pyfunction]
fn load_model(path: PathBuf) -> PyResult<PyModel> {
    let inner = model_io::parse_structural_model(&read(&path)?).map_err(to_py)?;
    Ok(PyModel { inner })
}

/// Reads a configuration and model pair in one call.
#[pyfunction]
fn load_case_files(config: PathBuf, model: PathBuf) -> PyResult<(PyConfig, PyModel)> {
    let (c, m) = load_case(&config, &model).map_err(to_py)?;
    Ok((PyConfig { inner: c }, PyModel { inner: m }))
}

#[pyfunction]
fn build_solvers(config: &PyConfig, model: &PyModel) -> PyResult<PySolvers> {
    let inner = coupling::build_solvers(&config.inner, &model.inner).map_err(to_py)?;
    Ok(PySolvers { inner })
}

#[pyfunction]
fn run(config: &PyConfig, solvers: &mut PySolvers) -> PyResult<PyHistory> {
    let inner = coupling::run(&config.inner, &mut solvers.inner).map_err(to_py)?;
    Ok(PyHistory { inner })
}

#[pymodule]
#[pyo3(name = "aerocouple")]
pub fn aerocouple_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PySolvers>()?;
    m.add_class::<PyHistory>()?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(load_case_files, m)?)?;
    m.add_function(wrap_pyfunction!(build_solvers, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    let py = m.py();
    m.add("AerocoupleError", py.get_type::<AerocoupleError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("ModelError", py.get_type::<ModelError>())?;
    m.add("ConvergenceError", py.get_type::<ConvergenceError>())?;
    Ok(())
}
