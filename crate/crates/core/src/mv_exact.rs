//! Exact mixed-volume oracles.
//!
//! The mixed volume used throughout is the derivative normalisation
//! `d^n/dx_1...dx_n V_K`, i.e. the coefficient of `x_1 x_2 ... x_n` in the
//! Minkowski volume polynomial (`n!` times the classical symmetric form).
//!
//! The primary oracle is inclusion-exclusion polarization over subset sums,
//!
//! ```text
//! V(K_1,...,K_n) = sum_{S nonempty} (-1)^(n-|S|) vol( sum_{i in S} K_i ),
//! ```
//!
//! exact because the volume polynomial is homogeneous of degree `n`.  Two
//! independent oracles cover special tuples: Ryser's permanent formula for
//! axis-aligned box tuples and a determinant for segment tuples.

use crate::geometry::{BodyTuple, ConvexBody, Limits};
use crate::polynomial::PolyCoefficients;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Arity cap for `2^n` polarization.
pub const POLARIZATION_MAX_N: usize = 12;
/// Arity cap for Ryser's formula.
pub const PERMANENT_MAX_N: usize = 20;
/// Arity cap for dense coefficient extraction.
pub const COEFFICIENTS_MAX_N: usize = 5;

/// How a mixed volume value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvMethod {
    Polarization,
    Permanent,
    SegmentDeterminant,
}

/// A mixed volume in the derivative normalisation.
#[derive(Debug, Clone, Copy)]
pub struct MixedVolumeResult {
    pub value: f64,
    pub method: MvMethod,
}

/// Evaluates the Minkowski volume polynomial `V_K(x) = vol(sum x_i K_i)`.
/// Requires `x >= 0`; an all-zero `x` gives 0.
pub fn minkowski_poly_eval(tuple: &BodyTuple, x: &[f64]) -> Result<f64> {
    minkowski_poly_eval_with(tuple, x, &Limits::default())
}

/// [`minkowski_poly_eval`] with explicit limits.
pub fn minkowski_poly_eval_with(tuple: &BodyTuple, x: &[f64], limits: &Limits) -> Result<f64> {
    if x.len() != tuple.n() {
        return Err(Error::DimensionMismatch { expected: tuple.n(), got: x.len() });
    }
    if x.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    tuple.combine_with(x, limits)?.volume_with(limits)
}

/// Exact mixed volume by polarization; `n <= 12`.
pub fn mixed_volume_polarization(tuple: &BodyTuple) -> Result<MixedVolumeResult> {
    mixed_volume_polarization_with(tuple, &Limits::default())
}

/// [`mixed_volume_polarization`] with explicit limits.
pub fn mixed_volume_polarization_with(
    tuple: &BodyTuple,
    limits: &Limits,
) -> Result<MixedVolumeResult> {
    let n = tuple.n();
    if n > POLARIZATION_MAX_N {
        return Err(Error::ArityCap { n, cap: POLARIZATION_MAX_N, op: "polarization" });
    }
    let masks: Vec<usize> = (1..(1usize << n)).collect();
    let vols: Vec<Result<f64>> = masks
        .par_iter()
        .map(|&mask| {
            let weights: Vec<f64> =
                (0..n).map(|i| if (mask >> i) & 1 == 1 { 1.0 } else { 0.0 }).collect();
            minkowski_poly_eval_with(tuple, &weights, limits)
        })
        .collect();
    // Fixed mask-order summation keeps the result bitwise deterministic.
    let mut value = 0.0;
    for (mask, v) in masks.iter().zip(vols) {
        let k = mask.count_ones() as usize;
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        value += sign * v?;
    }
    Ok(MixedVolumeResult { value, method: MvMethod::Polarization })
}

/// Exact permanent of a nonnegative square matrix by Ryser's
/// inclusion-exclusion over column subsets; `n <= 20`.
pub fn permanent_ryser(a: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if n > PERMANENT_MAX_N {
        return Err(Error::ArityCap { n, cap: PERMANENT_MAX_N, op: "permanent" });
    }
    for row in a {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be nonnegative".into()));
        }
    }
    // Gray-code walk over column subsets, maintaining row sums.
    let mut sums = vec![0.0f64; n];
    let mut total = 0.0f64;
    let mut prev: usize = 0;
    for k in 1usize..(1 << n) {
        let gray = k ^ (k >> 1);
        let diff = gray ^ prev;
        let j = diff.trailing_zeros() as usize;
        if gray & diff != 0 {
            for (s, row) in sums.iter_mut().zip(a) {
                *s += row[j];
            }
        } else {
            for (s, row) in sums.iter_mut().zip(a) {
                *s -= row[j];
            }
        }
        prev = gray;
        let card = gray.count_ones() as usize;
        let sign = if (n - card).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * sums.iter().product::<f64>();
    }
    Ok(total)
}

/// Mixed volume of the segment tuple with the given direction vectors:
/// `|det(v_1, ..., v_n)|`.
pub fn mixed_volume_segments(vectors: &[Vec<f64>]) -> Result<f64> {
    let n = vectors.len();
    if n == 0 || vectors.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidParameter("segment oracle needs n vectors of length n".into()));
    }
    let m = DMatrix::from_fn(n, n, |r, c| vectors[c][r]);
    Ok(m.determinant().abs())
}

/// Chebyshev nodes for interpolating coordinate `i` around `x_i`: multipliers
/// of `x_i` in `[0.5, 1.5]`.
fn chebyshev_nodes(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * count) as f64;
            1.0 + 0.5 * theta.cos()
        })
        .collect()
}

/// Solves for polynomial coefficients from values at distinct nodes.
fn vandermonde_fit(nodes: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let m = nodes.len();
    let v = DMatrix::from_fn(m, m, |r, c| nodes[r].powi(c as i32));
    let rhs = DVector::from_column_slice(values);
    v.lu()
        .solve(&rhs)
        .map(|s| s.iter().copied().collect())
        .ok_or_else(|| Error::IllConditioned("interpolation node matrix is singular".into()))
}

/// Exact partial derivative `dV_K/dx_i` at a strictly positive `x`, via
/// univariate interpolation of the degree-`aff(K_i)` restriction.
pub fn partial_derivative_exact(tuple: &BodyTuple, x: &[f64], i: usize) -> Result<f64> {
    partial_derivative_exact_with(tuple, x, i, &Limits::default())
}

/// [`partial_derivative_exact`] with explicit limits.
pub fn partial_derivative_exact_with(
    tuple: &BodyTuple,
    x: &[f64],
    i: usize,
    limits: &Limits,
) -> Result<f64> {
    let n = tuple.n();
    if i >= n {
        return Err(Error::InvalidParameter(format!("index {i} out of range")));
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("derivative point must be strictly positive".into()));
    }
    let deg = tuple.affine_dim(i);
    if deg == 0 {
        return Ok(0.0); // the restriction is constant in x_i
    }
    // Fit in the centred variable u = (t - x_i) / (0.5 x_i) on [-1, 1]; the
    // derivative at x_i is then the linear coefficient rescaled.
    let mults = chebyshev_nodes(deg + 1);
    let mut values = Vec::with_capacity(deg + 1);
    let mut us = Vec::with_capacity(deg + 1);
    for m in &mults {
        let mut xv = x.to_vec();
        xv[i] *= m;
        values.push(minkowski_poly_eval_with(tuple, &xv, limits)?);
        us.push((m - 1.0) / 0.5);
    }
    let coeffs = vandermonde_fit(&us, &values)?;
    Ok(coeffs[1] / (0.5 * x[i]))
}

/// Full coefficient table of the volume polynomial for `n <= 5`, by tensor
/// interpolation on a grid with `aff(K_i) + 1` Chebyshev nodes per variable.
pub fn minkowski_coefficients(tuple: &BodyTuple) -> Result<PolyCoefficients> {
    minkowski_coefficients_with(tuple, &Limits::default())
}

/// [`minkowski_coefficients`] with explicit limits.
pub fn minkowski_coefficients_with(tuple: &BodyTuple, limits: &Limits) -> Result<PolyCoefficients> {
    let n = tuple.n();
    if n > COEFFICIENTS_MAX_N {
        return Err(Error::ArityCap { n, cap: COEFFICIENTS_MAX_N, op: "coefficient extraction" });
    }
    let degs: Vec<usize> = (0..n).map(|i| tuple.affine_dim(i)).collect();
    let sizes: Vec<usize> = degs.iter().map(|d| d + 1).collect();
    let nodes: Vec<Vec<f64>> = sizes.iter().map(|&s| chebyshev_nodes(s)).collect();
    let total: usize = sizes.iter().product();

    // Evaluate on the tensor grid.
    let mut data = vec![0.0f64; total];
    let index_to_multi = |mut idx: usize| -> Vec<usize> {
        let mut multi = vec![0usize; n];
        for v in 0..n {
            multi[v] = idx % sizes[v];
            idx /= sizes[v];
        }
        multi
    };
    let evals: Vec<Result<f64>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let multi = index_to_multi(idx);
            let x: Vec<f64> = multi.iter().zip(&nodes).map(|(&k, ns)| ns[k]).collect();
            minkowski_poly_eval_with(tuple, &x, limits)
        })
        .collect();
    for (slot, v) in data.iter_mut().zip(evals) {
        *slot = v?;
    }

    // Interpolate one axis at a time: values at nodes -> monomial
    // coefficients along that axis.
    for v in 0..n {
        let s = sizes[v];
        let stride: usize = sizes[..v].iter().product();
        let outer: usize = total / (s * stride);
        let vm = DMatrix::from_fn(s, s, |r, c| nodes[v][r].powi(c as i32));
        let lu = vm.lu();
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * s * stride + inner;
                let pencil: Vec<f64> = (0..s).map(|k| data[base + k * stride]).collect();
                let rhs = DVector::from_column_slice(&pencil);
                let sol = lu.solve(&rhs).ok_or_else(|| {
                    Error::IllConditioned("tensor interpolation is singular".into())
                })?;
                for k in 0..s {
                    data[base + k * stride] = sol[k];
                }
            }
        }
    }

    let scale = data.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    let drop_tol = 1e-9 * scale;
    let stray_tol = 1e-7 * scale;
    let mut entries = Vec::new();
    for idx in 0..total {
        let c = data[idx];
        if c.abs() <= drop_tol {
            continue;
        }
        let multi = index_to_multi(idx);
        let degree: usize = multi.iter().sum();
        if degree != n {
            if c.abs() > stray_tol {
                return Err(Error::IllConditioned(format!(
                    "non-homogeneous term of size {c} at {multi:?}"
                )));
            }
            continue;
        }
        if c < -drop_tol {
            return Err(Error::NegativeCoefficient {
                value: c,
                context: format!("volume polynomial term {multi:?}"),
            });
        }
        entries.push((multi.iter().map(|&k| k as u32).collect(), c));
    }
    PolyCoefficients::new(n, entries)
}

/// Mixed volume with automatic oracle choice: permanent for all-box tuples,
/// determinant for segment tuples, polarization otherwise.
pub fn mixed_volume_auto(tuple: &BodyTuple) -> Result<MixedVolumeResult> {
    mixed_volume_auto_with(tuple, &Limits::default())
}

/// [`mixed_volume_auto`] with explicit limits for the polarization fallback.
pub fn mixed_volume_auto_with(tuple: &BodyTuple, limits: &Limits) -> Result<MixedVolumeResult> {
    let n = tuple.n();
    let all_box = tuple.bodies().iter().all(|b| matches!(b, ConvexBody::Box { .. }));
    if all_box && n <= PERMANENT_MAX_N {
        // Translation invariance: only the edge lengths matter.
        let a: Vec<Vec<f64>> = tuple
            .bodies()
            .iter()
            .map(|b| match b {
                ConvexBody::Box { lower, upper } => {
                    lower.iter().zip(upper).map(|(l, u)| u - l).collect()
                }
                _ => unreachable!(),
            })
            .collect();
        return Ok(MixedVolumeResult { value: permanent_ryser(&a)?, method: MvMethod::Permanent });
    }
    let segments: Option<Vec<Vec<f64>>> = tuple
        .bodies()
        .iter()
        .map(|b| match b {
            ConvexBody::Zonotope { generators, .. } if generators.len() == 1 => {
                Some(generators[0].clone())
            }
            ConvexBody::Zonotope { generators, .. } if generators.is_empty() => Some(vec![0.0; n]),
            _ => None,
        })
        .collect();
    if let Some(vs) = segments {
        return Ok(MixedVolumeResult {
            value: mixed_volume_segments(&vs)?,
            method: MvMethod::SegmentDeterminant,
        });
    }
    mixed_volume_polarization_with(tuple, limits)
}
