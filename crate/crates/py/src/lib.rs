//! Python bindings for `erw_core`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use erw_core::speed_bounds::SearchRegion;
use erw_core::{stationary, walker, ErwError};

create_exception!(erw, DomainError, PyException, "Operation undefined for this drift.");

fn to_py(e: ErwError) -> PyErr {
    match e {
        ErwError::Domain { .. } | ErwError::EmptyRegion { .. } => DomainError::new_err(e.to_string()),
        ErwError::NonConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        ErwError::InvalidArgument(_) | ErwError::InvalidEnvironment(_) => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "CookieEnvironment", module = "erw", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnvironment(erw_core::CookieEnvironment);

#[pymethods]
impl PyEnvironment {
    #[new]
    fn new(strengths: Vec<f64>) -> PyResult<Self> {
        erw_core::CookieEnvironment::new(strengths).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn uniform(cookies: usize, p: f64) -> PyResult<Self> {
        erw_core::CookieEnvironment::uniform(cookies, p).map(Self).map_err(to_py)
    }

    #[getter]
    fn strengths(&self) -> Vec<f64> {
        self.0.strengths().to_vec()
    }

    #[getter]
    fn cookies(&self) -> usize {
        self.0.cookies()
    }

    fn delta(&self) -> f64 {
        self.0.delta()
    }

    /// `(transience, speed_sign)` as strings.
    fn classify(&self) -> (String, String) {
        let c = self.0.classify();
        (format!("{:?}", c.transience), format!("{:?}", c.speed_sign))
    }

    fn mirror(&self) -> Self {
        Self(self.0.mirror())
    }

    fn trivial_speed_bound(&self) -> f64 {
        self.0.trivial_speed_bound()
    }

    fn __repr__(&self) -> String {
        format!("CookieEnvironment([{}])", self.0)
    }
}

#[pyclass(name = "TransitionKernel", module = "erw", frozen)]
struct PyKernel(erw_core::TransitionKernel);

#[pymethods]
impl PyKernel {
    #[new]
    fn new(env: &PyEnvironment) -> Self {
        Self(erw_core::TransitionKernel::new(env.0.clone()))
    }

    fn transition_prob(&self, i: u64, j: u64) -> f64 {
        self.0.transition_prob(i, j)
    }

    fn row(&self, i: u64, length: usize) -> Vec<f64> {
        self.0.row(i, length)
    }

    fn mean_next(&self, k: u64) -> f64 {
        self.0.mean_next(k)
    }

    fn pgf_next(&self, k: u64, s: f64) -> PyResult<f64> {
        self.0.pgf_next(k, s).map_err(to_py)
    }
}

#[pyclass(name = "StationarySolution", module = "erw", frozen, get_all)]
struct PySolution {
    truncation: usize,
    pi_hat: Vec<f64>,
    tail_mass: f64,
    tail_mass_bound: f64,
    mean_estimate: f64,
    genabc_residual: f64,
    speed_estimate: f64,
}

#[pyfunction]
#[pyo3(signature = (env, truncation = 200, tol = 1e-12))]
fn solve_stationary(py: Python<'_>, env: &PyEnvironment, truncation: usize, tol: f64) -> PyResult<PySolution> {
    let kernel = erw_core::TransitionKernel::new(env.0.clone());
    let sol = py
        .detach(|| stationary::solve_stationary(&kernel, truncation, tol))
        .map_err(to_py)?;
    Ok(PySolution {
        truncation: sol.truncation,
        pi_hat: sol.pi_hat,
        tail_mass: sol.tail_mass,
        tail_mass_bound: sol.tail_mass_bound,
        mean_estimate: sol.mean_estimate,
        genabc_residual: sol.genabc_residual,
        speed_estimate: sol.speed_estimate,
    })
}

/// `(v_lower, v_upper)` for three cookies.
#[pyfunction]
fn speed_interval(env: &PyEnvironment) -> PyResult<(f64, f64)> {
    let b = erw_core::speed_interval(&env.0).map_err(to_py)?;
    Ok((b.v_lower, b.v_upper))
}

#[pyfunction]
fn symmetric_interval(p: f64) -> PyResult<(f64, f64)> {
    erw_core::symmetric_interval(p).map_err(to_py)
}

#[pyfunction]
fn pi0_bracket(env: &PyEnvironment) -> PyResult<(f64, f64)> {
    erw_core::pi0_bracket(&env.0).map_err(to_py)
}

/// Returns `(argmax, max_gap, evaluations)`.
#[pyfunction]
#[pyo3(signature = (region = "symmetric", grid = 0.001, refine_tol = 1e-9))]
fn maximize_gap(py: Python<'_>, region: &str, grid: f64, refine_tol: f64) -> PyResult<(Vec<f64>, f64, usize)> {
    let region = match region {
        "symmetric" => SearchRegion::symmetric(),
        "general" => SearchRegion::general(),
        other => return Err(PyValueError::new_err(format!("unknown region {other:?}"))),
    };
    let r = py
        .detach(|| erw_core::maximize_gap(region, grid, refine_tol))
        .map_err(to_py)?;
    Ok((r.argmax, r.max_gap, r.evaluations))
}

#[pyfunction]
fn step_probability(env: &PyEnvironment, visit_count: u64) -> PyResult<f64> {
    if visit_count == 0 {
        return Err(PyValueError::new_err("visit_count must be at least 1"));
    }
    Ok(walker::step_probability(&env.0, visit_count))
}

#[pyfunction]
fn simulate_walk<'py>(py: Python<'py>, env: &PyEnvironment, steps: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let w = py.detach(|| walker::simulate_walk(&env.0, steps, seed));
    let d = PyDict::new(py);
    d.set_item("final_position", w.final_position)?;
    d.set_item("steps", w.steps)?;
    d.set_item("min_position", w.min_position)?;
    d.set_item("max_position", w.max_position)?;
    Ok(d)
}

/// Returns `(mean, std_error)` of `X_n / n` over replicates.
#[pyfunction]
fn estimate_speed(py: Python<'_>, env: &PyEnvironment, steps: u64, replicates: u64, seed: u64) -> PyResult<(f64, f64)> {
    let m = py
        .detach(|| walker::estimate_speed(&env.0, steps, replicates, seed))
        .map_err(to_py)?;
    Ok((m.mean, m.std_error))
}

/// First hitting time of `target`, or `None` on timeout.
#[pyfunction]
fn hitting_time(py: Python<'_>, env: &PyEnvironment, target: u64, seed: u64, step_cap: u64) -> PyResult<Option<u64>> {
    let outcome = py
        .detach(|| walker::hitting_time(&env.0, target, seed, step_cap))
        .map_err(to_py)?;
    Ok(match outcome {
        walker::HittingOutcome::Hit(t) => Some(t),
        walker::HittingOutcome::Timeout => None,
    })
}

#[pymodule]
fn erw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DomainError", m.py().get_type::<DomainError>())?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(speed_interval, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_interval, m)?)?;
    m.add_function(wrap_pyfunction!(pi0_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_gap, m)?)?;
    m.add_function(wrap_pyfunction!(step_probability, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_walk, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_speed, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_time, m)?)?;
    Ok(())
}
