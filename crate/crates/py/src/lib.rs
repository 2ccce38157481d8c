//! Python bindings for the mixed-volume toolkit.
//!
//! The module mirrors the Rust API at the granularity a Python caller needs:
//! `ConvexBody` / `BodyTuple` wrap the geometric types, reports come back as
//! plain dicts, and the closed-form bound factors are module functions.  All
//! mixed volumes use the derivative normalisation (`n!` times the classical
//! symmetric form) unless a function says otherwise.

// The #[pymethods]/#[pyfunction] expansions of pyo3 0.22 insert identity
// `PyErr` conversions that clippy flags as `useless_conversion`; `!(x > 0)`
// is the NaN-rejecting sign guard used throughout the core crate.
#![allow(clippy::useless_conversion)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use mixedvol::bounds;
use mixedvol::discriminant::{self, MatrixTuple};
use mixedvol::error::Error as CoreError;
use mixedvol::geometry::{BodyTuple, ConvexBody, Limits};
use mixedvol::io;
use mixedvol::mv_exact;
use mixedvol::scaling::{self, FunctionalClass, MinkowskiFunctional};
use mixedvol::solver::{self, CapacityReport, SolveOracle};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

/// Invalid inputs become `ValueError`; numeric/structural failures at solve
/// time become `RuntimeError`.
fn to_py_err(e: CoreError) -> PyErr {
    let msg = e.to_string();
    let input = matches!(
        e,
        CoreError::ParseInput(_)
            | CoreError::InvalidParameter(_)
            | CoreError::InvalidBody(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::DimensionCap { .. }
            | CoreError::Io(_)
            | CoreError::Json(_)
    );
    if input {
        PyValueError::new_err(msg)
    } else {
        PyRuntimeError::new_err(msg)
    }
}

trait IntoPyResult<T> {
    fn into_py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for Result<T, CoreError> {
    fn into_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn report_to_dict<'py>(py: Python<'py>, r: &CapacityReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("cap_estimate", r.cap_estimate)?;
    d.set_item("minimizer_y", r.minimizer_y.clone())?;
    d.set_item("additive_gap", r.additive_gap)?;
    d.set_item("mv_lower", r.mv_lower)?;
    d.set_item("mv_upper", r.mv_upper)?;
    d.set_item("factors", r.factors.clone())?;
    d.set_item("oracle_mode", r.oracle_mode.clone())?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("oracle_calls", r.oracle_calls)?;
    d.set_item("seed", r.seed)?;
    d.set_item("certified", r.certified)?;
    d.set_item("zero_certificate", r.zero_certificate.clone())?;
    Ok(d)
}

fn oracle_from_args(mode: &str, samples: u64) -> PyResult<SolveOracle> {
    match mode {
        "exact" => Ok(SolveOracle::Exact),
        "mc" => {
            if samples < 1000 {
                return Err(PyValueError::new_err(format!(
                    "mc mode needs at least 1000 samples, got {samples}"
                )));
            }
            Ok(SolveOracle::Mc { samples })
        }
        other => Err(PyValueError::new_err(format!("mode must be 'exact' or 'mc', got {other:?}"))),
    }
}

fn matrix_tuple_from_rows(matrices: Vec<Vec<Vec<f64>>>) -> PyResult<MatrixTuple> {
    MatrixTuple::new(dense_from_rows(&matrices)?).into_py()
}

fn dense_from_rows(matrices: &[Vec<Vec<f64>>]) -> PyResult<Vec<DMatrix<f64>>> {
    let n = matrices.len();
    let mut out = Vec::with_capacity(n);
    for (k, rows) in matrices.iter().enumerate() {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err(format!(
                "matrix {k} must be {n}x{n} to match the tuple length"
            )));
        }
        out.push(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
    }
    Ok(out)
}

/// A convex body in `R^n`: an axis-aligned box, a zonotope (base corner plus
/// generator subset sums), or the convex hull of explicit vertices.
#[pyclass(frozen, name = "ConvexBody", module = "mixedvol_py")]
#[derive(Clone)]
struct PyConvexBody {
    inner: ConvexBody,
}

#[pymethods]
impl PyConvexBody {
    /// Axis-aligned box `[lower_1, upper_1] x ... x [lower_n, upper_n]`.
    #[staticmethod]
    fn box_body(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: ConvexBody::cuboid(lower, upper).into_py()? })
    }

    /// Zonotope `center + sum of subsets of the generators`.
    #[staticmethod]
    fn zonotope(center: Vec<f64>, generators: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: ConvexBody::zonotope(center, generators).into_py()? })
    }

    /// Convex hull of the given vertices.
    #[staticmethod]
    fn vpolytope(vertices: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: ConvexBody::vpolytope(vertices).into_py()? })
    }

    /// Segment from `a` to `b`.
    #[staticmethod]
    fn segment(a: Vec<f64>, b: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: ConvexBody::segment(a, b).into_py()? })
    }

    /// Single point (a degenerate box).
    #[staticmethod]
    fn point(p: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: ConvexBody::point(p).into_py()? })
    }

    /// Ambient dimension.
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Dimension of the affine hull (0 for a point, `dim` for a full body).
    #[getter]
    fn affine_dim(&self) -> usize {
        self.inner.affine_dimension()
    }

    /// Exact Lebesgue volume in the ambient dimension (0 for flat bodies).
    fn volume(&self) -> PyResult<f64> {
        self.inner.volume().into_py()
    }

    /// The body scaled by `w >= 0` about its anchor.
    fn scale(&self, w: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.scale(w).into_py()? })
    }

    /// The body translated by `t`.
    fn translate(&self, t: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.translate(&t).into_py()? })
    }

    fn __repr__(&self) -> String {
        let kind = match &self.inner {
            ConvexBody::Box { .. } => "box",
            ConvexBody::Zonotope { .. } => "zonotope",
            ConvexBody::VPolytope { .. } => "vpolytope",
        };
        format!(
            "ConvexBody({kind}, dim={}, affine_dim={})",
            self.inner.dim(),
            self.inner.affine_dimension()
        )
    }
}

/// A tuple `(K_1, ..., K_n)` of `n` convex bodies in `R^n` — the argument of
/// the mixed volume and of the Minkowski volume polynomial
/// `V(x) = vol(x_1 K_1 + ... + x_n K_n)`.
#[pyclass(frozen, name = "BodyTuple", module = "mixedvol_py")]
#[derive(Clone)]
struct PyBodyTuple {
    inner: BodyTuple,
}

#[pymethods]
impl PyBodyTuple {
    #[new]
    fn new(bodies: Vec<PyConvexBody>) -> PyResult<Self> {
        let inner = BodyTuple::new(bodies.into_iter().map(|b| b.inner).collect()).into_py()?;
        Ok(Self { inner })
    }

    /// Parses the same JSON body-file format the command line tool reads and
    /// returns `(tuple, labels)`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<(Self, Vec<String>)> {
        let lt = io::parse_body_file(text).into_py()?;
        Ok((Self { inner: lt.tuple }, lt.labels))
    }

    /// Serialises the tuple back to the JSON body-file format.
    #[pyo3(signature = (labels=None))]
    fn to_json(&self, labels: Option<Vec<String>>) -> PyResult<String> {
        io::body_file_to_json(&self.inner, labels.as_deref()).into_py()
    }

    /// Number of bodies (equals the ambient dimension).
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// The bodies as a list.
    #[getter]
    fn bodies<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let mut items: Vec<Py<PyConvexBody>> = Vec::with_capacity(self.inner.n());
        for b in self.inner.bodies() {
            items.push(Py::new(py, PyConvexBody { inner: b.clone() })?);
        }
        Ok(PyList::new_bound(py, items))
    }

    /// Evaluates the volume polynomial `vol(sum x_i K_i)` at `x >= 0`.
    fn volume_poly(&self, x: Vec<f64>) -> PyResult<f64> {
        mv_exact::minkowski_poly_eval(&self.inner, &x).into_py()
    }

    /// Exact mixed volume in the derivative normalisation, together with the
    /// oracle that produced it (`"polarization"`, `"permanent"`, or
    /// `"segment-determinant"`).
    fn mixed_volume(&self) -> PyResult<(f64, String)> {
        let r = mv_exact::mixed_volume_auto(&self.inner).into_py()?;
        let method = match r.method {
            mv_exact::MvMethod::Polarization => "polarization",
            mv_exact::MvMethod::Permanent => "permanent",
            mv_exact::MvMethod::SegmentDeterminant => "segment-determinant",
        };
        Ok((r.value, method.to_string()))
    }

    /// Certified capacity minimisation: returns the report dict with
    /// `mv_lower <= mixed volume <= mv_upper * exp(additive_gap)`.
    #[pyo3(signature = (epsilon=1e-3, mode="exact", samples=100_000, seed=0, budget=100_000))]
    fn capacity<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        mode: &str,
        samples: u64,
        seed: u64,
        budget: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(PyValueError::new_err(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let oracle = oracle_from_args(mode, samples)?;
        let report = py
            .allow_threads(|| {
                solver::approx_mixed_volume_with(
                    &self.inner,
                    epsilon,
                    oracle,
                    seed,
                    budget,
                    &Limits::default(),
                )
            })
            .into_py()?;
        report_to_dict(py, &report)
    }

    /// Splits the tuple into indecomposable blocks; a `zero_certificate`
    /// entry (indices of a subset `S` with `aff(sum_S K_i) < |S|`) means the
    /// mixed volume is exactly zero.
    fn decompose<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let dec = solver::decompose(&self.inner).into_py()?;
        let d = PyDict::new_bound(py);
        let blocks = PyList::empty_bound(py);
        for b in &dec.blocks {
            let bd = PyDict::new_bound(py);
            bd.set_item("indices", b.indices.clone())?;
            bd.set_item("basis", b.basis.clone())?;
            blocks.append(bd)?;
        }
        d.set_item("blocks", blocks)?;
        d.set_item("zero_certificate", dec.zero_certificate.as_ref().map(|c| c.indices.clone()))?;
        Ok(d)
    }

    /// Per-body integer degrees `d(i)` of the lattice tuple and the product
    /// bound `prod d(i)` on the (integer) mixed volume.
    fn newton_degrees<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let nd = bounds::newton_polytope_degrees(&self.inner).into_py()?;
        let d = PyDict::new_bound(py);
        d.set_item("degrees", nd.degrees.clone())?;
        d.set_item("product_bound", nd.product_bound)?;
        Ok(d)
    }

    /// Sinkhorn-style scaling of the volume polynomial from `x0` (default:
    /// all ones).  Returns convergence flag, iteration states, and final `x`.
    #[pyo3(signature = (x0=None, iterations=200, epsilon=1e-7))]
    fn sinkhorn<'py>(
        &self,
        py: Python<'py>,
        x0: Option<Vec<f64>>,
        iterations: usize,
        epsilon: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let n = self.inner.n();
        let start = x0.unwrap_or_else(|| vec![1.0; n]);
        if start.len() != n || start.iter().any(|&c| !(c > 0.0)) {
            return Err(PyValueError::new_err(format!("x0 needs {n} positive entries")));
        }
        let f = MinkowskiFunctional::new(&self.inner);
        let traj = py
            .allow_threads(|| {
                scaling::sinkhorn_iterate(
                    &f,
                    FunctionalClass::RootConcave,
                    &start,
                    iterations,
                    epsilon,
                )
            })
            .into_py()?;
        let d = PyDict::new_bound(py);
        d.set_item("converged", traj.converged)?;
        d.set_item("steps", traj.states.len() - 1)?;
        let last = traj.last();
        d.set_item("x", last.x.clone())?;
        d.set_item("f_value", last.f_value)?;
        d.set_item("max_gamma_gap", last.gamma_gap())?;
        d.set_item("f_trajectory", traj.states.iter().map(|s| s.f_value).collect::<Vec<f64>>())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("BodyTuple(n={})", self.inner.n())
    }
}

/// Permanent of a square matrix (Ryser's formula).
#[pyfunction]
fn permanent(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    mv_exact::permanent_ryser(&rows).into_py()
}

/// Mixed volume of `n` segments in `R^n` = |det| of their direction matrix,
/// in the derivative normalisation.
#[pyfunction]
fn mixed_volume_segments(vectors: Vec<Vec<f64>>) -> PyResult<f64> {
    mv_exact::mixed_volume_segments(&vectors).into_py()
}

/// `n!/n^n`, the factorial-ratio capacity factor.
#[pyfunction]
fn vdw_factor(n: usize) -> f64 {
    bounds::vdw_factor(n)
}

/// `g(k) = ((k-1)/k)^(k-1)` with `g(1) = 1`; the product `g(1)...g(n)`
/// telescopes to `n!/n^n`.
#[pyfunction]
fn g_factor(k: usize) -> f64 {
    bounds::g_factor(k)
}

/// The per-index bound factor `lambda(n, k)` for affine-dimension cap `k`.
#[pyfunction]
fn lambda_factor(n: usize, k: usize) -> PyResult<f64> {
    bounds::lambda_factor(n, k).into_py()
}

/// `(k!/k^k) * lambda(n,k)^(n-k)`, the rank-capped bound factor.
#[pyfunction]
fn schrijver_factor(n: usize, k: usize) -> PyResult<f64> {
    bounds::schrijver_factor(n, k).into_py()
}

/// Volume of the Euclidean unit ball in `R^n`.
#[pyfunction]
fn unit_ball_volume(n: usize) -> f64 {
    discriminant::unit_ball_volume(n)
}

/// Exact mixed discriminant `d^n/dx_1...dx_n det(sum x_i A_i)` of symmetric
/// PSD matrices, by inclusion-exclusion.
#[pyfunction]
fn mixed_discriminant(matrices: Vec<Vec<Vec<f64>>>) -> PyResult<f64> {
    let tuple = matrix_tuple_from_rows(matrices)?;
    discriminant::mixed_discriminant_polarization(&tuple).into_py()
}

/// Capacity relaxation of the determinant polynomial of a PSD tuple;
/// returns the same report dict as `BodyTuple.capacity`.
#[pyfunction]
#[pyo3(signature = (matrices, epsilon=1e-3, seed=0))]
fn discriminant_capacity<'py>(
    py: Python<'py>,
    matrices: Vec<Vec<Vec<f64>>>,
    epsilon: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let tuple = matrix_tuple_from_rows(matrices)?;
    let report = py
        .allow_threads(|| discriminant::det_capacity_with(&tuple, epsilon, 100_000, seed))
        .into_py()?;
    report_to_dict(py, &report)
}

/// Two-sided bracket `(lower, upper)` on the mixed volume of the ellipsoids
/// `A_i(unit ball)` from the mixed discriminant of the Grams `A_i A_i^T`,
/// in the derivative normalisation.
#[pyfunction]
fn ellipsoid_bracket(factors: Vec<Vec<Vec<f64>>>) -> PyResult<(f64, f64)> {
    let mats = dense_from_rows(&factors)?;
    discriminant::barvinok_bracket(&mats).into_py()
}

/// Content hash of a byte string (hex), matching the `input_sha256` field of
/// command-line reports.
#[pyfunction]
fn content_hash(data: &[u8]) -> String {
    io::content_hash(data)
}

#[pymodule]
fn mixedvol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConvexBody>()?;
    m.add_class::<PyBodyTuple>()?;
    m.add_function(wrap_pyfunction!(permanent, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_volume_segments, m)?)?;
    m.add_function(wrap_pyfunction!(vdw_factor, m)?)?;
    m.add_function(wrap_pyfunction!(g_factor, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_factor, m)?)?;
    m.add_function(wrap_pyfunction!(schrijver_factor, m)?)?;
    m.add_function(wrap_pyfunction!(unit_ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(discriminant_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(ellipsoid_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(content_hash, m)?)?;
    Ok(())
}
