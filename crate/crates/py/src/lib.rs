//! Python bindings. Structured results are returned as plain Python
//! objects decoded from the library's JSON encoding.

use ::curvebpe as core;
use core::analysis::{
    bpe_sequence as core_bpe_sequence, density_verdict as core_density_verdict, GrowthPolicy, ScanOptions,
};
use core::basis::BasisFamily;
use core::curve::RationalMap;
use core::measure::DiscreteMeasure;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(e: core::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_object<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn family_from_name(name: Option<&str>, dim: usize) -> PyResult<BasisFamily> {
    match name {
        None if dim == 1 => Ok(BasisFamily::ParameterPolynomials),
        None => Ok(BasisFamily::CurveMonomials { dim }),
        Some("polynomials") => Ok(BasisFamily::ParameterPolynomials),
        Some("curve_monomials") => Ok(BasisFamily::CurveMonomials { dim }),
        Some("laurent") => Ok(BasisFamily::ParameterRational {
            poles: vec![Complex64::new(0.0, 0.0)],
            order_cap: None,
        }),
        Some(other) => Err(PyValueError::new_err(format!(
            "unknown family {other}; expected polynomials, curve_monomials or laurent"
        ))),
    }
}

/// Positive discrete measure on ℂⁿ.
#[pyclass(name = "Measure", module = "curvebpe", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMeasure {
    inner: DiscreteMeasure,
}

#[pymethods]
impl PyMeasure {
    /// `n` equally spaced nodes on `|ζ| = radius` with total mass `mass`.
    #[staticmethod]
    #[pyo3(signature = (n, radius = 1.0, mass = std::f64::consts::TAU))]
    fn uniform_circle(n: usize, radius: f64, mass: f64) -> PyResult<Self> {
        let inner = core::measure::uniform_circle_measure(radius, n, mass).map_err(to_py_err)?;
        Ok(PyMeasure { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMeasure { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn nodes(&self) -> Vec<Vec<Complex64>> {
        self.inner.nodes().map(<[Complex64]>::to_vec).collect()
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    fn scaled(&self, t: f64) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: self.inner.scaled(t).map_err(to_py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Measure(dim={}, nodes={}, label={:?})", self.inner.dim(), self.inner.len(), self.inner.label())
    }
}

/// Rational parametrization `ζ ↦ (R_1(ζ), …, R_n(ζ))`.
#[pyclass(name = "Map", module = "curvebpe", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMap {
    inner: RationalMap,
}

#[pymethods]
impl PyMap {
    #[staticmethod]
    fn hyperbola() -> Self {
        PyMap {
            inner: RationalMap::hyperbola(),
        }
    }

    #[staticmethod]
    fn monomial(exponents: Vec<usize>) -> Self {
        PyMap {
            inner: RationalMap::monomial(&exponents),
        }
    }

    #[staticmethod]
    fn identity() -> Self {
        PyMap {
            inner: RationalMap::identity(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMap { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __call__(&self, zeta: Complex64) -> PyResult<Vec<Complex64>> {
        self.inner.eval(zeta).map_err(to_py_err)
    }

    #[pyo3(signature = (point, tol = 1e-8))]
    fn fiber<'py>(&self, py: Python<'py>, point: Vec<Complex64>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.inner.fiber(&point, tol).map_err(to_py_err)?)
    }

    #[pyo3(signature = (cap = 20))]
    fn pullback_codimension<'py>(&self, py: Python<'py>, cap: usize) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.inner.pullback_codimension(cap).map_err(to_py_err)?)
    }
}

#[pyfunction]
fn pushforward(measure: &PyMeasure, map: &PyMap) -> PyResult<PyMeasure> {
    let inner = core::measure::pushforward(&measure.inner, &map.inner).map_err(to_py_err)?;
    Ok(PyMeasure { inner })
}

/// Returns `(measure, dropped_mass)`.
#[pyfunction]
#[pyo3(signature = (measure, map, tol = 1e-8))]
fn pullback(measure: &PyMeasure, map: &PyMap, tol: f64) -> PyResult<(PyMeasure, f64)> {
    let pb = core::measure::pullback_measure(&measure.inner, &map.inner, tol).map_err(to_py_err)?;
    Ok((PyMeasure { inner: pb.measure }, pb.dropped_mass))
}

#[pyfunction]
fn project(measure: &PyMeasure, a: Complex64) -> PyResult<PyMeasure> {
    let inner = core::measure::project_measure(&measure.inner, a).map_err(to_py_err)?;
    Ok(PyMeasure { inner })
}

/// `C_d(point)` for `d_min ≤ d ≤ d_max` with its growth classification.
#[pyfunction]
#[pyo3(signature = (measure, point, d_min, d_max, family = None))]
fn bpe_sequence<'py>(
    py: Python<'py>,
    measure: &PyMeasure,
    point: Vec<Complex64>,
    d_min: usize,
    d_max: usize,
    family: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let fam = family_from_name(family, measure.inner.dim())?;
    let report =
        core_bpe_sequence(&measure.inner, &fam, &point, d_min, d_max, &GrowthPolicy::default()).map_err(to_py_err)?;
    to_object(py, &report)
}

#[pyfunction]
#[pyo3(signature = (measure, d_max, param_degree = 1, family = None))]
fn density_verdict<'py>(
    py: Python<'py>,
    measure: &PyMeasure,
    d_max: usize,
    param_degree: usize,
    family: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let fam = family_from_name(family, measure.inner.dim())?;
    to_object(
        py,
        &core_density_verdict(&measure.inner, &fam, d_max, param_degree).map_err(to_py_err)?,
    )
}

/// Measures of a built-in example as `(nu, mu)`.
#[pyfunction]
#[pyo3(signature = (name, nodes = core::presets::DEFAULT_NODES, a = None))]
fn preset(name: &str, nodes: usize, a: Option<Complex64>) -> PyResult<(PyMeasure, PyMeasure)> {
    let p = core::presets::Preset::from_name(name, a)
        .and_then(|p| p.build(nodes))
        .map_err(to_py_err)?;
    Ok((PyMeasure { inner: p.nu }, PyMeasure { inner: p.mu }))
}

/// Region scan plus density verdict for a built-in example on the square
/// grid `[lo, hi]²` with `n` cells per side.
#[pyfunction]
#[pyo3(signature = (name, d_max, grid = None, nodes = core::presets::DEFAULT_NODES, a = None))]
fn analyze_preset<'py>(
    py: Python<'py>,
    name: &str,
    d_max: usize,
    grid: Option<(f64, f64, usize)>,
    nodes: usize,
    a: Option<Complex64>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = core::presets::Preset::from_name(name, a)
        .and_then(|p| p.build(nodes))
        .map_err(to_py_err)?;
    let grid = match grid {
        Some((lo, hi, n)) => core::analysis::GridSpec::square(lo, hi, n),
        None => p.default_grid.clone(),
    };
    let density_d_max = core::presets::guarded_density_degree(&p);
    let report = py
        .detach(|| core::presets::analyze(&p, &grid, &ScanOptions::new(0, d_max), density_d_max))
        .map_err(to_py_err)?;
    to_object(py, &report)
}

#[pyfunction]
#[pyo3(signature = (measure, degree, coordinate = 0, family = None))]
fn block_summary<'py>(
    py: Python<'py>,
    measure: &PyMeasure,
    degree: usize,
    coordinate: usize,
    family: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let fam = family_from_name(family, measure.inner.dim())?;
    let b = core::operators::block_decomposition(&measure.inner, &fam, degree, coordinate).map_err(to_py_err)?;
    to_object(py, &b.summary)
}

#[pyfunction]
#[pyo3(signature = (measure, beta, degrees, family = None))]
fn witness<'py>(
    py: Python<'py>,
    measure: &PyMeasure,
    beta: Vec<Complex64>,
    degrees: Vec<usize>,
    family: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let fam = family_from_name(family, measure.inner.dim())?;
    let ws = core::operators::witness_sequence(&measure.inner, &fam, &degrees, &beta).map_err(to_py_err)?;
    to_object(py, &ws)
}

#[pymodule]
fn curvebpe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(pushforward, m)?)?;
    m.add_function(wrap_pyfunction!(pullback, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(bpe_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(density_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_preset, m)?)?;
    m.add_function(wrap_pyfunction!(block_summary, m)?)?;
    m.add_function(wrap_pyfunction!(witness, m)?)?;
    Ok(())
}
