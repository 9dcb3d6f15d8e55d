//! Python bindings. Structured results come back as plain dicts and lists.

use finsler_core::conformal::{self, Tolerances, VectorFieldSpec};
use finsler_core::geodesics;
use finsler_core::geometry::{self, TOL_NULL};
use finsler_core::runner;
use finsler_core::zoo::{self, DiffeoSpec};
use finsler_core::{expr, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config { .. }
        | Error::Parse(_)
        | Error::UnknownIdentifier { .. }
        | Error::IndexOutOfRange { .. }
        | Error::YDependentSigma(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &finsler_core::nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// A 2-homogeneous Lagrangian `L(x, y)` with its admissible set.
#[pyclass(name = "Lagrangian", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLagrangian(zoo::Lagrangian);

#[pymethods]
impl PyLagrangian {
    #[staticmethod]
    fn minkowski(n: usize) -> PyResult<Self> {
        zoo::make_minkowski(n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn berwald_moor(n: usize) -> PyResult<Self> {
        zoo::make_berwald_moor(n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn pseudo_euclidean(signs: Vec<f64>) -> PyResult<Self> {
        zoo::make_pseudo_euclidean(&signs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn weighted_product(first: &Self, second: &Self, alpha: f64) -> PyResult<Self> {
        zoo::make_weighted_product(&first.0, &second.0, alpha).map(Self).map_err(err)
    }

    /// `e^sigma(x) L`.
    fn conformal(&self, sigma: &str) -> PyResult<Self> {
        let s = expr::parse(sigma, self.0.dim()).map_err(err)?;
        zoo::conformal_deform(&self.0, &s).map(Self).map_err(err)
    }

    /// `L(f(x), Df y)` for a map given by component expressions.
    fn pullback(&self, components: Vec<String>) -> PyResult<Self> {
        let f = parse_map(&components)?;
        zoo::pullback(&self.0, &f).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label().to_string()
    }

    fn value(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.0.value(&x, &y).map_err(err)
    }

    fn admissible(&self, x: Vec<f64>, y: Vec<f64>) -> bool {
        self.0.admissible(&x, &y)
    }

    /// Dict with `g`, `g_inv`, `eigenvalues`, `signature` and `det`.
    fn metric<'py>(&self, py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let m = geometry::metric_tensor(&self.0, &x, &y).map_err(err)?;
        let d = serde_json::json!({
            "g": rows(&m.g),
            "g_inv": rows(&m.g_inv),
            "eigenvalues": m.eigenvalues,
            "signature": [m.signature.0, m.signature.1],
            "det": m.det,
        });
        to_py(py, &d)
    }

    /// Spray coefficients `2G^i`.
    fn spray(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        geometry::spray(&self.0, &x, &y, false).map(|s| s.g2).map_err(err)
    }

    /// Nonlinear connection `G^i_j` as a row-major nested list.
    fn connection(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        geometry::connection(&self.0, &x, &y).map(|c| rows(&c)).map_err(err)
    }

    /// `"timelike"`, `"null"` or `"spacelike"`.
    fn causal(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<String> {
        let c = geometry::causal_character(&self.0, &x, &y, TOL_NULL).map_err(err)?;
        Ok(format!("{:?}", c.tag).to_lowercase())
    }

    fn __repr__(&self) -> String {
        format!("Lagrangian({}, dim={})", self.0.label(), self.0.dim())
    }
}

fn parse_map(components: &[String]) -> PyResult<DiffeoSpec> {
    let srcs: Vec<&str> = components.iter().map(String::as_str).collect();
    DiffeoSpec::parse(&srcs).map_err(err)
}

fn parse_field(components: &[String]) -> PyResult<VectorFieldSpec> {
    let srcs: Vec<&str> = components.iter().map(String::as_str).collect();
    VectorFieldSpec::parse(&srcs).map_err(err)
}

/// RK4 geodesic; returns `{"t", "x", "y", "L", "truncation"}`.
#[pyfunction]
#[pyo3(signature = (l, x0, y0, t_end=1.0, h=1e-3))]
fn geodesic<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    x0: Vec<f64>,
    y0: Vec<f64>,
    t_end: f64,
    h: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let tr = geodesics::integrate_geodesic(&l.0, &x0, &y0, t_end, h).map_err(err)?;
    let s = tr.samples();
    let d = serde_json::json!({
        "t": s.iter().map(|p| p.t).collect::<Vec<_>>(),
        "x": s.iter().map(|p| p.x.clone()).collect::<Vec<_>>(),
        "y": s.iter().map(|p| p.y.clone()).collect::<Vec<_>>(),
        "L": s.iter().map(|p| l.0.value(&p.x, &p.y).unwrap_or(f64::NAN)).collect::<Vec<_>>(),
        "energy_drift": geodesics::energy_drift(&tr, &l.0),
        "truncation": tr.truncation(),
    });
    to_py(py, &d)
}

/// Relative residual of `L'(f(x), Df y) = e^sigma(x) L(x, y)` on seeded samples.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (l, map, sigma, target=None, samples=1000, seed=0, bounds=(-1.0, 1.0)))]
fn conformal_residual<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    map: Vec<String>,
    sigma: &str,
    target: Option<&PyLagrangian>,
    samples: usize,
    seed: u64,
    bounds: (f64, f64),
) -> PyResult<Bound<'py, PyAny>> {
    let f = parse_map(&map)?;
    let s = expr::parse(sigma, l.0.dim()).map_err(err)?;
    let pts = zoo::sample_points(&l.0, bounds.0, bounds.1, samples, seed).map_err(err)?;
    let lp = target.map(|t| &t.0).unwrap_or(&l.0);
    let v = conformal::conformal_residual(&l.0, lp, &f, &s, &pts, Tolerances::default()).map_err(err)?;
    to_py(py, &v)
}

/// Killing / conformal / not-conformal verdict for a vector field.
#[pyfunction]
#[pyo3(signature = (l, field, points=20, directions=16, seed=0, bounds=(-1.0, 1.0)))]
fn field_report<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    field: Vec<String>,
    points: usize,
    directions: usize,
    seed: u64,
    bounds: (f64, f64),
) -> PyResult<Bound<'py, PyAny>> {
    let xi = parse_field(&field)?;
    let pts = zoo::sample_box(l.0.dim(), bounds.0, bounds.1, points, seed);
    let v = conformal::conformal_field_report(&l.0, &xi, &pts, directions, seed.wrapping_add(1), Tolerances::default())
        .map_err(err)?;
    to_py(py, &v)
}

/// Lie derivative of `L` along the complete lift of `field`.
#[pyfunction]
fn lie_derivative(l: &PyLagrangian, field: Vec<String>, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    let xi = parse_field(&field)?;
    conformal::lie_derivative_l(&l.0, &xi, &x, &y).map_err(err)
}

/// Spray defect of `e^sigma L` against `L`, with a witness search.
#[pyfunction]
#[pyo3(signature = (l, sigma, samples=1000, seed=0, bounds=(-1.0, 1.0), tol=1e-10))]
fn weyl_probe<'py>(
    py: Python<'py>,
    l: &PyLagrangian,
    sigma: &str,
    samples: usize,
    seed: u64,
    bounds: (f64, f64),
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = expr::parse(sigma, l.0.dim()).map_err(err)?;
    let pts = zoo::sample_points(&l.0, bounds.0, bounds.1, samples, seed).map_err(err)?;
    let r = conformal::weyl_probe(&l.0, &s, &pts, tol).map_err(err)?;
    to_py(py, &r)
}

/// Runs experiment TOML text; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (text, seed=None, jobs=None))]
fn run_experiment<'py>(py: Python<'py>, text: &str, seed: Option<u64>, jobs: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let mut spec = runner::parse_experiment(text).map_err(err)?;
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    let report = runner::run(&spec, jobs).map_err(err)?;
    to_py(py, &report)
}

/// Names of the bundled suites.
#[pyfunction]
fn suites() -> Vec<&'static str> {
    runner::SUITES.iter().map(|(n, _)| *n).collect()
}

/// Runs a bundled suite by name.
#[pyfunction]
#[pyo3(signature = (name, seed=None, jobs=None))]
fn run_suite<'py>(py: Python<'py>, name: &str, seed: Option<u64>, jobs: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let text = runner::suite(name).ok_or_else(|| PyValueError::new_err(format!("unknown suite `{name}`")))?;
    run_experiment(py, text, seed, jobs)
}

#[pymodule]
pub fn finsler(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", finsler_core::VERSION)?;
    m.add_class::<PyLagrangian>()?;
    m.add_function(wrap_pyfunction!(geodesic, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_residual, m)?)?;
    m.add_function(wrap_pyfunction!(field_report, m)?)?;
    m.add_function(wrap_pyfunction!(lie_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_probe, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(suites, m)?)?;
    Ok(())
}
