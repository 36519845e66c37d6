//! Python bindings: lifts, one-forms, rough integrals, generators and metrics.

use std::collections::BTreeMap;

use brp_core::effect::{full_integral, integral_path as core_integral_path, IntegrationOptions};
use brp_core::fixtures::ito_corrections;
use brp_core::one_form::OneFormConfig;
use brp_core::pi::compare_first_levels as core_compare;
use brp_core::verify::algebra_suite;
use brp_core::{BranchedRoughPath, Character, PolynomialOneForm};
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;

fn err(e: brp_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tree_dict(c: &Character) -> BTreeMap<String, f64> {
    c.to_json().trees.into_iter().map(|t| (t.forest, t.value)).collect()
}

/// A branched rough path sampled on a grid.
#[pyclass(name = "Path", module = "brp", frozen)]
struct PyPath {
    inner: BranchedRoughPath,
}

#[pymethods]
impl PyPath {
    /// Canonical lift of the piecewise-linear interpolation.
    #[staticmethod]
    fn canonical(times: Vec<f64>, points: Vec<Vec<f64>>, p: f64) -> PyResult<Self> {
        Ok(PyPath { inner: BranchedRoughPath::canonical_lift(&times, &points, p).map_err(err)? })
    }

    /// Itô-type lift with `c_ii(t) = -scale (t - t0) / 2` on every `[•_i]_i`.
    #[staticmethod]
    #[pyo3(signature = (times, points, p, scale = 1.0))]
    fn ito(times: Vec<f64>, points: Vec<Vec<f64>>, p: f64, scale: f64) -> PyResult<Self> {
        let d = points.first().map_or(0, Vec::len);
        let corr = ito_corrections(d, &times, scale);
        Ok(PyPath { inner: BranchedRoughPath::ito_like_lift(&times, &points, p, &corr).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let json = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyPath { inner: BranchedRoughPath::from_json(&json).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_json()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Tree values of `X_{t_i, t_j}` keyed by forest encoding.
    fn increment(&self, i: usize, j: usize) -> PyResult<BTreeMap<String, f64>> {
        if i > j || j >= self.inner.len() {
            return Err(PyIndexError::new_err(format!("bad grid pair ({i}, {j})")));
        }
        Ok(tree_dict(&self.inner.increment_idx(i, j)))
    }

    fn position(&self, k: usize) -> PyResult<Vec<f64>> {
        if k >= self.inner.len() {
            return Err(PyIndexError::new_err(format!("index {k} out of range")));
        }
        Ok(self.inner.position(k))
    }

    fn p_variation(&self) -> f64 {
        self.inner.total_p_variation()
    }

    fn dilate(&self, factor: f64) -> PyPath {
        PyPath { inner: self.inner.dilate(factor) }
    }

    fn __repr__(&self) -> String {
        format!("Path(d={}, p={}, samples={})", self.inner.d(), self.inner.p(), self.inner.len())
    }
}

/// Polynomial one-form `f : R^d -> L(R^d, R^e)` with a Lip exponent.
#[pyclass(name = "OneForm", module = "brp", frozen)]
struct PyOneForm {
    inner: PolynomialOneForm,
}

#[pymethods]
impl PyOneForm {
    /// From `{"d", "e", "gamma", "components"}` JSON.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg: OneFormConfig = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyOneForm { inner: PolynomialOneForm::from_config(&cfg).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_config()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn e(&self) -> usize {
        self.inner.e()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }
}

#[derive(IntoPyObject)]
struct Integral {
    value: BTreeMap<String, f64>,
    finest_sums: BTreeMap<String, f64>,
    gap: f64,
}

fn options(max_levels: Option<usize>) -> IntegrationOptions {
    let mut opts = IntegrationOptions::default();
    if let Some(levels) = max_levels {
        opts.max_levels = levels.max(1);
    }
    opts
}

fn window(path: &BranchedRoughPath, s: Option<usize>, t: Option<usize>) -> PyResult<(usize, usize)> {
    let (s, t) = (s.unwrap_or(0), t.unwrap_or(path.len() - 1));
    if s >= t || t >= path.len() {
        return Err(PyIndexError::new_err(format!("bad grid window [{s}, {t}]")));
    }
    Ok((s, t))
}

/// Rough integral of `form` along `path` over grid indices `[s, t]`.
#[pyfunction]
#[pyo3(signature = (form, path, s = None, t = None, max_levels = None))]
fn integrate(form: &PyOneForm, path: &PyPath, s: Option<usize>, t: Option<usize>, max_levels: Option<usize>) -> PyResult<Integral> {
    let (s, t) = window(&path.inner, s, t)?;
    let y = full_integral(&form.inner, &path.inner, s, t, &options(max_levels)).map_err(err)?;
    Ok(Integral { value: tree_dict(&y.y), finest_sums: tree_dict(&y.raw), gap: y.gap })
}

/// The integral as a path, `Y_{t_0, t_k}` at every sample.
#[pyfunction]
fn integral_path(form: &PyOneForm, path: &PyPath) -> PyResult<PyPath> {
    Ok(PyPath { inner: core_integral_path(&form.inner, &path.inner).map_err(err)? })
}

#[pyfunction]
fn dp_metric(a: &PyPath, b: &PyPath) -> PyResult<f64> {
    brp_core::rough_path::dp_metric(&a.inner, &b.inner).map_err(err)
}

/// Trees generating the truncated Grossman-Larson algebra, by encoding.
#[pyfunction]
fn generators(d: usize, p_floor: usize) -> PyResult<Vec<String>> {
    let gens = brp_core::pi::compute_generators(d, p_floor).map_err(err)?;
    Ok(gens.generators().iter().map(|t| t.encoding()).collect())
}

#[derive(IntoPyObject)]
struct Comparison {
    gap: f64,
    value_gap: f64,
    branched: Vec<f64>,
    pi: Vec<f64>,
}

/// First levels of the branched and Π integrals on the same dyadic meshes.
#[pyfunction]
#[pyo3(signature = (form, path, s = None, t = None))]
fn compare_first_levels(form: &PyOneForm, path: &PyPath, s: Option<usize>, t: Option<usize>) -> PyResult<Comparison> {
    let (s, t) = window(&path.inner, s, t)?;
    let cmp = core_compare(&form.inner, &path.inner, s, t, &IntegrationOptions::default()).map_err(err)?;
    Ok(Comparison { gap: cmp.gap, value_gap: cmp.value_gap, branched: cmp.branched.value, pi: cmp.pi.value })
}

/// Runs the exact algebra suite; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (d = 2, degree = 3, instances = 100, seed = 0))]
fn verify_algebra(d: usize, degree: usize, instances: usize, seed: u64) -> PyResult<String> {
    let report = algebra_suite(d, degree, instances, seed).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn brp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPath>()?;
    m.add_class::<PyOneForm>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(integral_path, m)?)?;
    m.add_function(wrap_pyfunction!(dp_metric, m)?)?;
    m.add_function(wrap_pyfunction!(generators, m)?)?;
    m.add_function(wrap_pyfunction!(compare_first_levels, m)?)?;
    m.add_function(wrap_pyfunction!(verify_algebra, m)?)?;
    Ok(())
}
