//! Python bindings. Matrices cross the boundary as lists of rows; bases are
//! `p x 2` lists of rows.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use anomtour_core as core;
use core::index::{AnomalyIndex, OutlierRule, OutlierSet};
use core::numerics::Matrix;
use core::reference::{self, Level};
use core::robust::{self, RobustOptions};
use core::tour::{self, GuidedOptions, ProjectionBasis, TourTrace};

create_exception!(anomtour, AnomtourError, PyException);

fn err(e: core::Error) -> PyErr {
    AnomtourError::new_err(format!("[{}] {e}", e.kind()))
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).or_raise()
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

fn basis(rows: &[Vec<f64>]) -> PyResult<ProjectionBasis> {
    ProjectionBasis::new(matrix(rows)?).or_raise()
}

fn level(prob: Option<f64>, c2: Option<f64>, sigma: Option<f64>, default: Level) -> PyResult<Level> {
    match (prob, c2, sigma) {
        (None, None, None) => Ok(default),
        (Some(p), None, None) => Ok(Level::Probability(p)),
        (None, Some(c), None) => Ok(Level::C2(c)),
        (None, None, Some(s)) => Ok(Level::Sigma(s)),
        _ => Err(AnomtourError::new_err("[InvalidArgument] give at most one of prob, c2, sigma")),
    }
}

fn rule(rule: &str, k: Option<usize>, rows: Option<Vec<usize>>) -> PyResult<OutlierRule> {
    match (rule, k, rows) {
        ("outside", None, None) => Ok(OutlierRule::OutsideEllipsoid),
        ("topk", Some(k), None) => Ok(OutlierRule::TopK(k)),
        ("manual", None, Some(r)) => Ok(OutlierRule::Manual(r)),
        _ => Err(AnomtourError::new_err(
            "[InvalidArgument] rule is 'outside', 'topk' with k, or 'manual' with rows",
        )),
    }
}

fn frames<'py>(py: Python<'py>, trace: &TourTrace) -> PyResult<Vec<Bound<'py, PyDict>>> {
    trace
        .frames
        .iter()
        .map(|f| {
            let d = PyDict::new(py);
            d.set_item("basis", to_rows(f.basis.matrix()))?;
            d.set_item("t", f.t)?;
            d.set_item("index", f.index_value)?;
            d.set_item("is_target", f.is_target)?;
            Ok(d)
        })
        .collect()
}

/// Reference ellipsoid `(x - mean) covariance⁻¹ (x - mean)ᵀ = c²`.
#[pyclass(name = "ReferenceModel", module = "anomtour", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyReferenceModel {
    inner: reference::ReferenceModel,
}

#[pymethods]
impl PyReferenceModel {
    #[new]
    #[pyo3(signature = (mean, covariance, *, prob=None, c2=None, sigma=None))]
    fn new(
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        prob: Option<f64>,
        c2: Option<f64>,
        sigma: Option<f64>,
    ) -> PyResult<Self> {
        let lvl = level(prob, c2, sigma, Level::Probability(0.95))?;
        let inner = reference::ReferenceModel::new(mean, matrix(&covariance)?, lvl).or_raise()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = reference::read_model(path).and_then(|f| f.model()).or_raise()?;
        Ok(Self { inner })
    }

    /// The model in the text model-file format.
    fn dumps(&self) -> String {
        reference::write_model(&reference::ModelFile::from_model(&self.inner))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean().to_vec()
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.covariance().matrix())
    }

    #[getter]
    fn level_c2(&self) -> f64 {
        self.inner.level_c2()
    }

    fn quad_form(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.quad_form(&x).or_raise()
    }

    fn contains(&self, x: Vec<f64>) -> PyResult<bool> {
        self.inner.contains(&x).or_raise()
    }

    /// `(center, shape)` of the projected ellipse on the plane of `basis`.
    fn project(&self, basis_rows: Vec<Vec<f64>>) -> PyResult<([f64; 2], Vec<Vec<f64>>)> {
        let e = reference::project_model(&self.inner, &basis(&basis_rows)?).or_raise()?;
        Ok((e.center, to_rows(e.shape.matrix())))
    }

    #[pyo3(signature = (basis_rows, n_points=128))]
    fn boundary(&self, basis_rows: Vec<Vec<f64>>, n_points: usize) -> PyResult<Vec<[f64; 2]>> {
        let e = reference::project_model(&self.inner, &basis(&basis_rows)?).or_raise()?;
        e.boundary(n_points).or_raise()
    }

    #[pyo3(signature = (n, seed=0))]
    fn sample_surface(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&reference::sample_ellipsoid_surface(&self.inner, n, seed).or_raise()?))
    }

    fn __repr__(&self) -> String {
        format!("ReferenceModel(dim={}, level_c2={})", self.inner.dim(), self.inner.level_c2())
    }
}

#[pyfunction]
fn chi2_quantile(prob: f64, df: u32) -> PyResult<f64> {
    core::numerics::chi2_quantile(prob, df).or_raise()
}

#[pyfunction]
fn chi2_quantile_upper(tail: f64, df: u32) -> PyResult<f64> {
    core::numerics::chi2_quantile_upper(tail, df).or_raise()
}

#[pyfunction]
fn load_csv(path: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let ds = core::data::load_csv(path).or_raise()?;
    Ok((ds.column_names.clone(), to_rows(&ds.values)))
}

#[pyfunction]
fn mahalanobis_sq(x: Vec<Vec<f64>>, model: &PyReferenceModel) -> PyResult<Vec<f64>> {
    core::index::mahalanobis_sq_rows(&matrix(&x)?, &model.inner).or_raise()
}

#[pyfunction]
#[pyo3(signature = (x, model, rule_name="outside", k=None, rows=None))]
fn select_outliers(
    x: Vec<Vec<f64>>,
    model: &PyReferenceModel,
    rule_name: &str,
    k: Option<usize>,
    rows: Option<Vec<usize>>,
) -> PyResult<Vec<usize>> {
    let r = rule(rule_name, k, rows)?;
    let set = core::index::select_outliers(&matrix(&x)?, &model.inner, &r).or_raise()?;
    Ok(set.indices().to_vec())
}

#[pyfunction]
fn anomaly_index(
    x: Vec<Vec<f64>>,
    outliers: Vec<usize>,
    model: &PyReferenceModel,
    basis_rows: Vec<Vec<f64>>,
) -> PyResult<f64> {
    let w = OutlierSet::manual(outliers, x.len()).or_raise()?;
    core::index::anomaly_index(&matrix(&x)?, &w, &model.inner, &basis(&basis_rows)?).or_raise()
}

#[pyfunction]
#[pyo3(signature = (p, seed=0))]
fn random_basis(p: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(tour::random_basis(p, seed).or_raise()?.matrix()))
}

#[pyfunction]
fn orthonormalize(a: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&core::numerics::orthonormalize(&matrix(&a)?).or_raise()?))
}

#[pyfunction]
fn geodesic_interpolate(fa: Vec<Vec<f64>>, fb: Vec<Vec<f64>>, t: f64) -> PyResult<Vec<Vec<f64>>> {
    let f = tour::geodesic_interpolate(&basis(&fa)?, &basis(&fb)?, t).or_raise()?;
    Ok(to_rows(f.matrix()))
}

#[pyfunction]
fn principal_angles(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<[f64; 2]> {
    tour::principal_angles(&basis(&a)?, &basis(&b)?).or_raise()
}

/// Frames of a grand tour, as dicts with `basis`, `t`, `index`, `is_target`.
#[pyfunction]
#[pyo3(signature = (p, n_targets, steps_per_leg, seed=0))]
fn grand_tour<'py>(
    py: Python<'py>,
    p: usize,
    n_targets: usize,
    steps_per_leg: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let trace = py
        .detach(|| tour::grand_tour(p, n_targets, steps_per_leg, seed))
        .or_raise()?;
    frames(py, &trace)
}

/// Guided tour maximising the anomaly index of `outliers` (default: rows
/// outside the ellipsoid).
#[pyfunction]
#[pyo3(signature = (x, model, outliers=None, start=None, seed=0))]
fn guided_tour<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    model: &PyReferenceModel,
    outliers: Option<Vec<usize>>,
    start: Option<Vec<Vec<f64>>>,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let x = matrix(&x)?;
    let w = match outliers {
        Some(rows) => OutlierSet::manual(rows, x.rows()),
        None => core::index::select_outliers(&x, &model.inner, &OutlierRule::OutsideEllipsoid),
    }
    .or_raise()?;
    let start = match start {
        Some(rows) => basis(&rows)?,
        None => tour::random_basis(x.cols(), seed).or_raise()?,
    };
    let trace = py
        .detach(|| {
            let index = AnomalyIndex::new(&x, &w, &model.inner)?;
            tour::guided_tour(&index, &start, &GuidedOptions::default(), seed.wrapping_add(1))
        })
        .or_raise()?;
    frames(py, &trace)
}

/// Fast MCD on `x`; returns a dict with `mean`, `covariance`, `support`,
/// `log_det` and `det_traces`.
#[pyfunction]
#[pyo3(signature = (x, h, n_starts=20, seed=0))]
fn fast_mcd<'py>(py: Python<'py>, x: Vec<Vec<f64>>, h: usize, n_starts: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let x = matrix(&x)?;
    let fit = py.detach(|| robust::fast_mcd(&x, h, n_starts, seed)).or_raise()?;
    let d = PyDict::new(py);
    d.set_item("mean", fit.mean.clone())?;
    d.set_item("covariance", to_rows(fit.covariance.matrix()))?;
    d.set_item("support", fit.support.clone())?;
    d.set_item("log_det", fit.log_det())?;
    d.set_item("det_traces", fit.det_traces.clone())?;
    Ok(d)
}

/// Robust reference in median/MAD standardised coordinates. Returns
/// `(model, standardized_rows, medians, mads)`.
#[pyfunction]
#[pyo3(signature = (x, *, prob=None, c2=None, sigma=None, h=None, n_starts=20, reweight=true, seed=0))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn robust_reference(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    prob: Option<f64>,
    c2: Option<f64>,
    sigma: Option<f64>,
    h: Option<usize>,
    n_starts: usize,
    reweight: bool,
    seed: u64,
) -> PyResult<(PyReferenceModel, Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    let x = matrix(&x)?;
    let lvl = level(prob, c2, sigma, Level::Sigma(5.0))?;
    let opts = RobustOptions { h, n_starts, reweight, seed, ..RobustOptions::default() };
    let r = py.detach(|| robust::robust_reference(&x, lvl, &opts)).or_raise()?;
    Ok((
        PyReferenceModel { inner: r.model },
        to_rows(&r.standardized),
        r.scaling.medians,
        r.scaling.mads,
    ))
}

#[pyfunction]
#[pyo3(signature = (x, k, n_starts=10, seed=0))]
fn kmeans(x: Vec<Vec<f64>>, k: usize, n_starts: usize, seed: u64) -> PyResult<(Vec<usize>, Vec<Vec<f64>>)> {
    let s = robust::kmeans(&matrix(&x)?, k, n_starts, seed).or_raise()?;
    Ok((s.labels, to_rows(&s.centroids)))
}

#[pyfunction]
fn dunn_index(x: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    robust::dunn_index(&matrix(&x)?, &labels).or_raise()
}

/// Clusters directions of `x` for each k in `k_min..=k_max`; returns
/// `(k, labels, [(k, dunn), ...])`.
#[pyfunction]
#[pyo3(signature = (x, k_min=2, k_max=8, n_starts=10, seed=0))]
#[allow(clippy::type_complexity)]
fn select_k(
    x: Vec<Vec<f64>>,
    k_min: usize,
    k_max: usize,
    n_starts: usize,
    seed: u64,
) -> PyResult<(usize, Vec<usize>, Vec<(usize, f64)>)> {
    let dirs = robust::normalize_directions(&matrix(&x)?).or_raise()?;
    let sel = robust::select_k(&dirs, k_min..=k_max, n_starts, seed).or_raise()?;
    Ok((sel.best.k, sel.best.labels, sel.scores))
}

#[pymodule]
fn anomtour(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AnomtourError", m.py().get_type::<AnomtourError>())?;
    m.add_class::<PyReferenceModel>()?;
    m.add_function(wrap_pyfunction!(chi2_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_quantile_upper, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(mahalanobis_sq, m)?)?;
    m.add_function(wrap_pyfunction!(select_outliers, m)?)?;
    m.add_function(wrap_pyfunction!(anomaly_index, m)?)?;
    m.add_function(wrap_pyfunction!(random_basis, m)?)?;
    m.add_function(wrap_pyfunction!(orthonormalize, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(principal_angles, m)?)?;
    m.add_function(wrap_pyfunction!(grand_tour, m)?)?;
    m.add_function(wrap_pyfunction!(guided_tour, m)?)?;
    m.add_function(wrap_pyfunction!(fast_mcd, m)?)?;
    m.add_function(wrap_pyfunction!(robust_reference, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(dunn_index, m)?)?;
    m.add_function(wrap_pyfunction!(select_k, m)?)?;
    Ok(())
}
