//! Capacity minimisation with certificates, and the mixed-volume
//! approximation pipeline built on it.
//!
//! Pipeline: decompose the tuple into indecomposable blocks (or detect a
//! zero mixed volume outright), bound the minimiser of the convex objective
//! inside a ball of computable radius, minimise with either a central-cut
//! ellipsoid (noise-tolerant) or projected gradient (exact oracle), and
//! convert the certified capacity into a two-sided mixed-volume bracket
//! through the `λ(i, D(i))` factors.

use crate::bounds::lambda_factor;
use crate::capacity::{
    eval_unconstrained, objective_gradient_with, project_zero_sum, zero_sum_basis, OracleMode,
};
use crate::geometry::{BodyTuple, ConvexBody, Limits};
use crate::mv_exact::{minkowski_poly_eval_with, mixed_volume_auto_with};
use crate::rng::derive_seed;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Arity cap for the subset scan (2^n subsets).
pub const DECOMPOSE_MAX_N: usize = 15;
/// Arity cap for the pairwise-substitution positivity matrix.
pub const KIJ_MAX_N: usize = 10;

/// Oracle family used by the solver; per-call seeds are derived from the
/// solver seed, so the mode itself carries none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveOracle {
    Exact,
    Mc { samples: u64 },
}

impl std::fmt::Display for SolveOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveOracle::Exact => write!(f, "exact"),
            SolveOracle::Mc { samples } => write!(f, "mc({samples})"),
        }
    }
}

/// Minimisation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Central-cut ellipsoid with a projected-gradient polish (exact mode).
    Ellipsoid,
    /// Projected gradient only; requires the exact oracle.
    ProjectedGradient,
}

/// A subset witnessing decomposability: `aff(sum over indices) <= |indices|`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SubsetCertificate {
    pub indices: Vec<usize>,
    pub affine_dim: usize,
}

/// One indecomposable factor of a tuple: the original body indices, an
/// orthonormal basis (columns, in original coordinates) of its span, and
/// the tuple restricted to that span.
#[derive(Debug, Clone)]
pub struct DecompositionBlock {
    pub indices: Vec<usize>,
    pub basis: Vec<Vec<f64>>,
    pub tuple: BodyTuple,
}

/// Outcome of decomposition preprocessing.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub blocks: Vec<DecompositionBlock>,
    /// A subset with `aff < |S|`: the mixed volume is exactly zero.
    pub zero_certificate: Option<SubsetCertificate>,
}

/// Certified output of capacity minimisation / mixed-volume approximation.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CapacityReport {
    /// `exp(f(ŷ))`, an upper estimate of the capacity.
    pub cap_estimate: f64,
    pub minimizer_y: Vec<f64>,
    /// Certified bound on `f(ŷ) - min f` (plus oracle value error).
    pub additive_gap: f64,
    /// `cap_estimate * prod(factors) / exp(additive_gap)`.
    pub mv_lower: f64,
    /// `cap_estimate`; the true mixed volume is at most
    /// `mv_upper * exp(additive_gap)`.
    pub mv_upper: f64,
    /// `λ(i, D(i))` per index (block-local positions after decomposition).
    pub factors: Vec<f64>,
    pub oracle_mode: String,
    pub iterations: u64,
    pub oracle_calls: u64,
    pub seed: u64,
    pub certified: bool,
    pub zero_certificate: Option<Vec<usize>>,
}

/// Proper nonempty subsets of `{0..n}` ordered by cardinality (then value),
/// so the first violation found is minimal.
fn masks_by_size(n: usize, include_full: bool) -> Vec<usize> {
    let top = 1usize << n;
    let mut masks: Vec<usize> = (1..top).filter(|&m| include_full || m != top - 1).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    masks
}

fn mask_indices(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| (mask >> i) & 1 == 1).collect()
}

/// True iff every proper nonempty subset `S` satisfies
/// `aff(sum_{i in S} K_i) > |S|`; otherwise returns a minimal witness.
pub fn indecomposability_check(tuple: &BodyTuple) -> Result<(bool, Option<SubsetCertificate>)> {
    let n = tuple.n();
    if n > DECOMPOSE_MAX_N {
        return Err(Error::ArityCap { n, cap: DECOMPOSE_MAX_N, op: "subset scan" });
    }
    for mask in masks_by_size(n, false) {
        let indices = mask_indices(mask, n);
        let aff = tuple.sum_affine_dim(&indices)?;
        if aff <= indices.len() {
            return Ok((false, Some(SubsetCertificate { indices, affine_dim: aff })));
        }
    }
    Ok((true, None))
}

/// Mixed volumes of the `n^2` substitution tuples `K^{ij}` (slot `j`
/// replaced by body `i`); the diagonal is the original tuple.
pub fn kij_values(tuple: &BodyTuple) -> Result<Vec<Vec<f64>>> {
    kij_values_with(tuple, &Limits::default())
}

/// [`kij_values`] with explicit limits.
pub fn kij_values_with(tuple: &BodyTuple, limits: &Limits) -> Result<Vec<Vec<f64>>> {
    let n = tuple.n();
    if n > KIJ_MAX_N {
        return Err(Error::ArityCap { n, cap: KIJ_MAX_N, op: "substitution matrix" });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let vals: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut bodies = tuple.bodies().to_vec();
            bodies[j] = bodies[i].clone();
            let t = BodyTuple::new(bodies)?;
            Ok(mixed_volume_auto_with(&t, limits)?.value)
        })
        .collect();
    let mut out = vec![vec![0.0; n]; n];
    for ((i, j), v) in pairs.into_iter().zip(vals) {
        out[i][j] = v?;
    }
    Ok(out)
}

/// Boolean positivity matrix of [`kij_values`] at threshold 1e-12.
pub fn kij_positivity(tuple: &BodyTuple) -> Result<Vec<Vec<bool>>> {
    Ok(kij_values(tuple)?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v > 1e-12).collect())
        .collect())
}

/// Gram-Schmidt; returns orthonormal columns spanning the inputs.
fn orthonormal_span(vectors: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let scale = 1.0 + vectors.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, c| m.max(c.abs()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let dot: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= dot * bi;
            }
        }
        let norm: f64 = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-9 * scale {
            for wi in &mut w {
                *wi /= norm;
            }
            basis.push(w);
            if basis.len() == n {
                break;
            }
        }
    }
    basis
}

/// Extends `span` to an orthonormal basis of `R^n` and returns the new
/// columns (the orthogonal complement).
fn complement_basis(span: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut all = span.to_vec();
    let mut complement = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for b in &all {
            let dot: f64 = e.iter().zip(b).map(|(a, c)| a * c).sum();
            for (ei, bi) in e.iter_mut().zip(b) {
                *ei -= dot * bi;
            }
        }
        let norm: f64 = e.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for ei in &mut e {
                *ei /= norm;
            }
            all.push(e.clone());
            complement.push(e);
        }
    }
    complement
}

fn project_vec(x: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    basis.iter().map(|b| b.iter().zip(x).map(|(bi, xi)| bi * xi).sum()).collect()
}

/// Restricts a body to the subspace spanned by orthonormal `basis` columns
/// (coordinates in that basis).  Volumes in the subspace are preserved.
fn project_body(body: &ConvexBody, basis: &[Vec<f64>], limits: &Limits) -> Result<ConvexBody> {
    match body {
        ConvexBody::Box { lower, upper } => {
            let center = project_vec(lower, basis);
            let d = lower.len();
            let mut gens = Vec::new();
            for j in 0..d {
                let gap = upper[j] - lower[j];
                if gap > 0.0 {
                    let mut e = vec![0.0; d];
                    e[j] = gap;
                    gens.push(project_vec(&e, basis));
                }
            }
            ConvexBody::zonotope(center, gens)
        }
        ConvexBody::Zonotope { center, generators } => ConvexBody::zonotope(
            project_vec(center, basis),
            generators.iter().map(|g| project_vec(g, basis)).collect(),
        ),
        ConvexBody::VPolytope { vertices } => ConvexBody::vpolytope_with(
            vertices.iter().map(|v| project_vec(v, basis)).collect(),
            limits,
        ),
    }
}

/// Column composition: expresses subspace basis `inner` (columns in the
/// coordinates of `outer`) in the original coordinates.
fn compose_bases(outer: &[Vec<f64>], inner: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let orig_dim = outer.first().map_or(0, |c| c.len());
    inner
        .iter()
        .map(|col| {
            let mut v = vec![0.0; orig_dim];
            for (k, &coef) in col.iter().enumerate() {
                for (vi, oi) in v.iter_mut().zip(&outer[k]) {
                    *vi += coef * oi;
                }
            }
            v
        })
        .collect()
}

/// Splits a tuple into indecomposable blocks, or certifies that the mixed
/// volume is exactly zero.  The product of block mixed volumes equals the
/// mixed volume of the input.
pub fn decompose(tuple: &BodyTuple) -> Result<DecompositionResult> {
    decompose_with(tuple, &Limits::default())
}

/// [`decompose`] with explicit limits.
pub fn decompose_with(tuple: &BodyTuple, limits: &Limits) -> Result<DecompositionResult> {
    let n = tuple.n();
    if n > DECOMPOSE_MAX_N {
        return Err(Error::ArityCap { n, cap: DECOMPOSE_MAX_N, op: "decomposition" });
    }
    let identity: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut blocks = Vec::new();
    let mut stack = vec![(tuple.clone(), (0..n).collect::<Vec<usize>>(), identity)];
    while let Some((cur, idx_map, ambient)) = stack.pop() {
        let d = cur.n();
        // Degeneracy has priority: a subset with aff < |S| kills the whole
        // mixed volume, so scan for one before extracting any block.
        let masks = masks_by_size(d, true);
        for &mask in &masks {
            let local = mask_indices(mask, d);
            let aff = cur.sum_affine_dim(&local)?;
            if aff < local.len() {
                return Ok(DecompositionResult {
                    blocks: Vec::new(),
                    zero_certificate: Some(SubsetCertificate {
                        indices: local.iter().map(|&i| idx_map[i]).collect(),
                        affine_dim: aff,
                    }),
                });
            }
        }
        let mut violation: Option<(Vec<usize>, usize)> = None;
        for &mask in &masks {
            let local = mask_indices(mask, d);
            if local.len() == d {
                continue;
            }
            let aff = cur.sum_affine_dim(&local)?;
            if aff == local.len() {
                violation = Some((local, aff));
                break;
            }
        }
        match violation {
            None => {
                blocks.push(DecompositionBlock { indices: idx_map, basis: ambient, tuple: cur });
            }
            Some((local, _aff)) => {
                let mut dirs = Vec::new();
                for &i in &local {
                    dirs.extend(cur.bodies()[i].directions());
                }
                let span = orthonormal_span(&dirs, d);
                let comp = complement_basis(&span, d);
                let block_bodies: Result<Vec<ConvexBody>> =
                    local.iter().map(|&i| project_body(&cur.bodies()[i], &span, limits)).collect();
                let block_tuple = BodyTuple::new(block_bodies?)?;
                // Minimality of the violating subset makes the block itself
                // indecomposable; emit it and recurse on the complement.
                blocks.push(DecompositionBlock {
                    indices: local.iter().map(|&i| idx_map[i]).collect(),
                    basis: compose_bases(&ambient, &span),
                    tuple: block_tuple,
                });
                let rest: Vec<usize> = (0..d).filter(|i| !local.contains(i)).collect();
                let rest_bodies: Result<Vec<ConvexBody>> =
                    rest.iter().map(|&i| project_body(&cur.bodies()[i], &comp, limits)).collect();
                let rest_tuple = BodyTuple::new(rest_bodies?)?;
                stack.push((
                    rest_tuple,
                    rest.iter().map(|&i| idx_map[i]).collect(),
                    compose_bases(&ambient, &comp),
                ));
            }
        }
    }
    blocks.sort_by_key(|b| b.indices.iter().copied().min().unwrap_or(0));
    debug_assert_eq!(blocks.iter().map(|b| b.indices.len()).sum::<usize>(), n);
    Ok(DecompositionResult { blocks, zero_certificate: None })
}

/// A-priori radius of a ball (in the zero-sum hyperplane) containing the
/// objective's minimiser: `sqrt(n) log(2 U / Stf)` with `U = V_K(1)` and
/// `Stf` the smallest substitution mixed volume.
pub fn search_radius(tuple: &BodyTuple) -> Result<f64> {
    search_radius_with(tuple, &Limits::default())
}

/// [`search_radius`] with explicit limits.
pub fn search_radius_with(tuple: &BodyTuple, limits: &Limits) -> Result<f64> {
    let n = tuple.n();
    if n == 1 {
        return Ok(1.0);
    }
    let u = minkowski_poly_eval_with(tuple, &vec![1.0; n], limits)?;
    let vals = kij_values_with(tuple, limits)?;
    let mut stf = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                stf = stf.min(vals[i][j]);
            }
        }
    }
    if !(stf > 1e-300) {
        let (_, cert) = indecomposability_check(tuple)?;
        return Err(Error::NotIndecomposable {
            witness: cert.map(|c| c.indices).unwrap_or_default(),
        });
    }
    Ok((n as f64).sqrt() * (2.0 * u / stf).ln().max(0.0) + 1.0)
}

/// A convex log-capacity minimisation problem: the log of an n-homogeneous
/// positive functional evaluated at `x = exp(y)`.  Lets the determinant
/// sibling reuse the whole solver.
pub(crate) trait CapacityProblem {
    fn n(&self) -> usize;
    fn value_exact(&self, y: &[f64]) -> Result<f64>;
    /// Exact scale-free gradient `γ_i = x_i ∂_i f / f`.
    fn gamma_exact(&self, y: &[f64]) -> Result<Vec<f64>>;
    /// Sampling oracle: `(log-value, additive value error)` with failure
    /// probability at most `delta`.  Unavailable by default.
    fn value_mc(&self, y: &[f64], samples: u64, seed: u64, delta: f64) -> Result<(f64, f64)> {
        let _ = (y, samples, seed, delta);
        Err(Error::InvalidParameter("sampling oracle is not available for this objective".into()))
    }
}

/// The standard problem: log of the volume polynomial of a body tuple.
pub(crate) struct BodyProblem<'a> {
    pub tuple: &'a BodyTuple,
    pub limits: &'a Limits,
}

impl CapacityProblem for BodyProblem<'_> {
    fn n(&self) -> usize {
        self.tuple.n()
    }

    fn value_exact(&self, y: &[f64]) -> Result<f64> {
        Ok(eval_unconstrained(self.tuple, y, &OracleMode::Exact, 0.05, self.limits)?.0)
    }

    fn gamma_exact(&self, y: &[f64]) -> Result<Vec<f64>> {
        objective_gradient_with(self.tuple, y, self.limits)
    }

    fn value_mc(&self, y: &[f64], samples: u64, seed: u64, delta: f64) -> Result<(f64, f64)> {
        let (v, q) = eval_unconstrained(
            self.tuple,
            y,
            &OracleMode::Mc { samples, seed },
            delta,
            self.limits,
        )?;
        Ok((v, q.value_err))
    }
}

/// Mutable bookkeeping shared by the minimisers.
struct SolveState<'a> {
    problem: &'a dyn CapacityProblem,
    oracle: SolveOracle,
    seed: u64,
    calls: u64,
}

impl<'a> SolveState<'a> {
    /// Noisy/exact value of the unconstrained extension at `y`; returns
    /// `(value, additive value error)`.
    fn value(&mut self, y: &[f64], delta: f64) -> Result<(f64, f64)> {
        self.calls += 1;
        match self.oracle {
            SolveOracle::Exact => Ok((self.problem.value_exact(y)?, 0.0)),
            SolveOracle::Mc { samples } => {
                self.problem.value_mc(y, samples, derive_seed(self.seed, self.calls), delta)
            }
        }
    }

    /// Gradient estimate at zero-sum `y`: exact Euler weights, or one-sided
    /// differences at the error-optimal step in mc mode.  Returns
    /// `(gamma, per-component additive error)`.
    fn gradient(&mut self, y: &[f64], delta: f64) -> Result<(Vec<f64>, f64)> {
        match self.oracle {
            SolveOracle::Exact => {
                let n = self.problem.n();
                self.calls += n as u64;
                Ok((self.problem.gamma_exact(y)?, 0.0))
            }
            SolveOracle::Mc { .. } => {
                let n = self.problem.n();
                let (f0, a0) = self.value(y, delta)?;
                let a = a0.max(1e-12);
                let step = 2.0 * (a / n as f64).sqrt();
                let mut g = Vec::with_capacity(n);
                let mut worst = a;
                for i in 0..n {
                    let mut yp = y.to_vec();
                    yp[i] += step;
                    let (fi, ai) = self.value(&yp, delta)?;
                    worst = worst.max(ai);
                    g.push((fi - f0) / step);
                }
                // difference-quotient error: curvature n/2 * step + 2a/step
                let err = 2.0 * (n as f64 * worst).sqrt();
                Ok((g, err))
            }
        }
    }
}

struct MinimizeOutcome {
    y: Vec<f64>,
    value: f64,
    value_err: f64,
    opt_gap: f64,
    iterations: u64,
    hit_boundary: bool,
}

/// Projects `y` into the zero-sum ball of radius `r`.
fn clamp_ball(y: &[f64], r: f64) -> Vec<f64> {
    let y = project_zero_sum(y);
    let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > r {
        y.iter().map(|v| v * r / norm).collect()
    } else {
        y
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected gradient with Armijo backtracking (exact oracle); certificate
/// is the subgradient bound `2 r ||γ - 1||`.
fn pgd_minimize(
    state: &mut SolveState,
    start: &[f64],
    r: f64,
    tol: f64,
    budget: u64,
) -> Result<MinimizeOutcome> {
    let mut y = clamp_ball(start, r);
    let (mut fy, mut verr) = state.value(&y, 0.05)?;
    let mut eta = 0.5;
    let mut best = MinimizeOutcome {
        y: y.clone(),
        value: fy,
        value_err: verr,
        opt_gap: f64::INFINITY,
        iterations: 0,
        hit_boundary: false,
    };
    for it in 0..budget {
        let (gamma, _) = state.gradient(&y, 0.05)?;
        let d: Vec<f64> = gamma.iter().map(|g| g - 1.0).collect();
        let gnorm = l2(&d);
        let cert = 2.0 * r * gnorm;
        if cert < best.opt_gap || fy < best.value {
            best = MinimizeOutcome {
                y: y.clone(),
                value: fy,
                value_err: verr,
                opt_gap: cert.min(best.opt_gap),
                iterations: it + 1,
                hit_boundary: l2(&y) >= 0.95 * r,
            };
        }
        if cert <= tol {
            break;
        }
        // Armijo line search along -d.
        let mut accepted = false;
        while eta > 1e-14 {
            let trial: Vec<f64> =
                clamp_ball(&y.iter().zip(&d).map(|(a, b)| a - eta * b).collect::<Vec<_>>(), r);
            let moved: Vec<f64> = trial.iter().zip(&y).map(|(a, b)| a - b).collect();
            let decrease: f64 = d.iter().zip(&moved).map(|(a, b)| -a * b).sum();
            let (ft, et) = state.value(&trial, 0.05)?;
            if ft <= fy - 0.1 * decrease.max(0.0) && ft < fy {
                y = trial;
                fy = ft;
                verr = et;
                eta = (eta * 1.8).min(4.0);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break; // no descent possible at machine precision
        }
        if state.calls >= budget * 64 {
            break;
        }
    }
    Ok(best)
}

/// Central-cut ellipsoid on the zero-sum hyperplane coordinates; tolerates
/// bounded oracle noise.  `var_hat` scales the volume-shrinkage
/// certificate.
#[allow(clippy::too_many_arguments)]
fn ellipsoid_minimize(
    state: &mut SolveState,
    basis: &DMatrix<f64>,
    r: f64,
    tol: f64,
    var_hat: f64,
    delta_call: f64,
    grad_slop: f64,
    budget: u64,
) -> Result<MinimizeOutcome> {
    let n = state.problem.n();
    let m = n - 1;
    let vol_rate = (2 * m * (m + 1)) as f64;
    let plan = (vol_rate * (2.0 * var_hat / tol).max(std::f64::consts::E).ln()).ceil() as u64;
    let max_iters = plan.min(budget.max(1));

    if m == 1 {
        return bisect_minimize(state, basis, r, tol, delta_call, grad_slop, max_iters);
    }

    let mut p = DMatrix::<f64>::identity(m, m) * (r * r);
    let mut c = DVector::<f64>::zeros(m);
    let mut best: Option<MinimizeOutcome> = None;
    let mut obj_cuts = 0u64;
    for it in 0..max_iters {
        let cn = c.norm();
        let g_z: DVector<f64> = if cn > r {
            c.clone() // feasibility cut: move back toward the ball
        } else {
            let y: Vec<f64> = (basis * &c).iter().copied().collect();
            let (fy, verr) = state.value(&y, delta_call)?;
            let (gamma, gerr) = state.gradient(&y, delta_call)?;
            let d: Vec<f64> = gamma.iter().map(|g| g - 1.0).collect();
            let gz = basis.transpose() * DVector::from_column_slice(&d);
            let grad_cert = 2.0 * r * (gz.norm() + gerr * (n as f64).sqrt()) + grad_slop;
            obj_cuts += 1;
            let vol_cert = var_hat * (-(obj_cuts as f64) / vol_rate).exp();
            let cert = grad_cert.min(vol_cert);
            let better = match &best {
                None => true,
                Some(b) => fy < b.value || cert < b.opt_gap,
            };
            if better {
                let prev_gap = best.as_ref().map_or(f64::INFINITY, |b| b.opt_gap);
                best = Some(MinimizeOutcome {
                    y: y.clone(),
                    value: fy.min(best.as_ref().map_or(f64::INFINITY, |b| b.value)),
                    value_err: verr,
                    opt_gap: cert.min(prev_gap),
                    iterations: it + 1,
                    hit_boundary: cn >= 0.95 * r,
                });
            }
            if best.as_ref().is_some_and(|b| b.opt_gap <= tol) {
                break;
            }
            if gz.norm() <= 1e-14 {
                break; // stationary: the gradient certificate is already 0
            }
            gz
        };
        let pg = &p * &g_z;
        let denom = g_z.dot(&pg).max(0.0).sqrt();
        if denom < 1e-300 {
            break;
        }
        let gt = pg / denom;
        c -= &gt * (1.0 / (m as f64 + 1.0));
        let scale = (m * m) as f64 / ((m * m) as f64 - 1.0);
        p = (&p - &gt * gt.transpose() * (2.0 / (m as f64 + 1.0))) * scale;
        // keep the shape matrix symmetric against drift
        p = (&p + p.transpose()) * 0.5;
    }
    best.ok_or_else(|| Error::IllConditioned("ellipsoid made no objective evaluation".into()))
}

/// One-dimensional slice (n = 2): bisection on the sign of the reduced
/// derivative.
fn bisect_minimize(
    state: &mut SolveState,
    basis: &DMatrix<f64>,
    r: f64,
    tol: f64,
    delta_call: f64,
    grad_slop: f64,
    max_iters: u64,
) -> Result<MinimizeOutcome> {
    let n = state.problem.n();
    let to_y = |z: f64| -> Vec<f64> { (0..n).map(|i| basis[(i, 0)] * z).collect() };
    let mut lo = -r;
    let mut hi = r;
    let mut best: Option<MinimizeOutcome> = None;
    for it in 0..max_iters.max(80) {
        let z = 0.5 * (lo + hi);
        let y = to_y(z);
        let (fy, verr) = state.value(&y, delta_call)?;
        let (gamma, gerr) = state.gradient(&y, delta_call)?;
        let d: Vec<f64> = gamma.iter().map(|g| g - 1.0).collect();
        let slope: f64 = (0..n).map(|i| basis[(i, 0)] * d[i]).sum();
        let cert = 2.0 * r * (slope.abs() + gerr * (n as f64).sqrt()) + grad_slop;
        let better = best.as_ref().is_none_or(|b| fy < b.value || cert < b.opt_gap);
        if better {
            let prev_gap = best.as_ref().map_or(f64::INFINITY, |b| b.opt_gap);
            best = Some(MinimizeOutcome {
                y,
                value: fy,
                value_err: verr,
                opt_gap: cert.min(prev_gap),
                iterations: it + 1,
                hit_boundary: z.abs() >= 0.95 * r,
            });
        }
        if best.as_ref().is_some_and(|b| b.opt_gap <= tol) || (hi - lo) < 1e-15 * r {
            break;
        }
        if slope > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
    }
    best.ok_or_else(|| Error::IllConditioned("bisection made no evaluation".into()))
}

/// Minimises the capacity objective over an indecomposable tuple and
/// certifies an additive optimality gap of at most `tol` (flagging the
/// report `certified: false` if the budget runs out first).
pub fn minimize_capacity(
    tuple: &BodyTuple,
    tol: f64,
    oracle: SolveOracle,
    budget: u64,
    seed: u64,
) -> Result<CapacityReport> {
    minimize_capacity_with(
        tuple,
        tol,
        oracle,
        budget,
        seed,
        SolveMethod::Ellipsoid,
        &Limits::default(),
    )
}

/// [`minimize_capacity`] with method and limits chosen by the caller.
pub fn minimize_capacity_with(
    tuple: &BodyTuple,
    tol: f64,
    oracle: SolveOracle,
    budget: u64,
    seed: u64,
    method: SolveMethod,
    limits: &Limits,
) -> Result<CapacityReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter("tolerance must lie in (0, 1)".into()));
    }
    if method == SolveMethod::ProjectedGradient && matches!(oracle, SolveOracle::Mc { .. }) {
        return Err(Error::InvalidParameter(
            "projected gradient needs the exact oracle; use the ellipsoid for mc".into(),
        ));
    }
    let n = tuple.n();
    if n <= DECOMPOSE_MAX_N {
        let (ok, cert) = indecomposability_check(tuple)?;
        if !ok {
            return Err(Error::NotIndecomposable {
                witness: cert.map(|c| c.indices).unwrap_or_default(),
            });
        }
    }
    // Clamp the a-priori radius so boundary probes stay inside exp() range;
    // if the substitution volumes contradict the (numerically verified)
    // indecomposability, start from a moderate ball.  Either way the
    // doubling fallback can widen the search.
    let r_cap = 25.0 * (n as f64).sqrt();
    let r0 = if n == 1 {
        1.0
    } else {
        match search_radius_with(tuple, limits) {
            Ok(r) => r.min(r_cap),
            Err(Error::NotIndecomposable { .. }) if n <= DECOMPOSE_MAX_N => {
                10.0 * (n as f64).sqrt()
            }
            Err(e) => return Err(e),
        }
    };
    let problem = BodyProblem { tuple, limits };
    let sol = minimize_core(&problem, r0, tol, oracle, budget, seed, method)?;
    Ok(finish_report(tuple, oracle, seed, sol))
}

/// Solution of the inner minimisation, before bracket assembly.
pub(crate) struct CoreSolution {
    pub y: Vec<f64>,
    pub log_value: f64,
    pub additive_gap: f64,
    pub iterations: u64,
    pub oracle_calls: u64,
    pub certified: bool,
}

/// Shared minimisation driver: probes the spread over the search ball,
/// runs the chosen method, and widens the ball when the minimiser lands on
/// its boundary.
pub(crate) fn minimize_core(
    problem: &dyn CapacityProblem,
    r0: f64,
    tol: f64,
    oracle: SolveOracle,
    budget: u64,
    seed: u64,
    method: SolveMethod,
) -> Result<CoreSolution> {
    let n = problem.n();
    let mut state = SolveState { problem, oracle, seed, calls: 0 };

    if n == 1 {
        let (f0, a0) = state.value(&[0.0], 0.05)?;
        return Ok(CoreSolution {
            y: vec![0.0],
            log_value: f0,
            additive_gap: a0,
            iterations: 0,
            oracle_calls: state.calls,
            certified: true,
        });
    }

    let mut r = r0;
    let basis = zero_sum_basis(n);
    let m = n - 1;
    let mut outcome: Option<MinimizeOutcome> = None;
    let mut iterations = 0u64;
    for _restart in 0..=10 {
        // Spread of f over the current ball, from boundary probes.
        let mut probes = vec![vec![0.0; n]];
        for k in 0..m {
            for sgn in [1.0f64, -1.0] {
                probes.push((0..n).map(|i| sgn * r * basis[(i, k)]).collect());
            }
        }
        let delta_var = 1.0 / (8.0 * probes.len() as f64);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut probe_err = 0.0f64;
        for pybe in &probes {
            let (v, e) = state.value(pybe, delta_var)?;
            if !v.is_finite() {
                return Err(Error::IllConditioned(
                    "objective overflows on the search ball boundary".into(),
                ));
            }
            lo = lo.min(v);
            hi = hi.max(v);
            probe_err = probe_err.max(e);
        }
        let var_hat = 2.0 * (hi - lo) + 4.0 * probe_err;

        // Failure budget for the iteration phase: 1/8 total, split across
        // the planned number of oracle calls.
        let vol_rate = (2 * m.max(1) * (m + 1)) as f64;
        let planned = (vol_rate * (2.0 * var_hat.max(1.0) / tol).ln().max(1.0)).ceil() as u64 + 1;
        let delta_call = 1.0 / (8.0 * (planned * (n as u64 + 2)) as f64);
        let grad_slop = 0.0;

        let mut res = match method {
            SolveMethod::ProjectedGradient => {
                pgd_minimize(&mut state, &vec![0.0; n], r, tol, budget)?
            }
            SolveMethod::Ellipsoid => {
                let el = ellipsoid_minimize(
                    &mut state, &basis, r, tol, var_hat, delta_call, grad_slop, budget,
                )?;
                if matches!(oracle, SolveOracle::Exact) && el.opt_gap > tol {
                    // polish: the gradient certificate collapses at optimum
                    let pol = pgd_minimize(&mut state, &el.y, r, tol, budget)?;
                    let mut merged = if pol.value <= el.value { pol } else { el.clone_lite() };
                    merged.opt_gap = merged.opt_gap.min(el.opt_gap);
                    merged.iterations += el.iterations;
                    merged
                } else {
                    el
                }
            }
        };
        iterations += res.iterations;
        let done = res.opt_gap <= tol;
        let boundary = res.hit_boundary;
        res.iterations = iterations;
        outcome = Some(res);
        if done || !boundary {
            break;
        }
        r *= 2.0; // minimiser may sit outside: widen and retry
    }
    let out = outcome.expect("at least one solve attempt runs");
    Ok(CoreSolution {
        log_value: out.value,
        additive_gap: out.opt_gap + out.value_err,
        certified: out.opt_gap <= tol,
        y: out.y,
        iterations: out.iterations,
        oracle_calls: state.calls,
    })
}

impl MinimizeOutcome {
    fn clone_lite(&self) -> MinimizeOutcome {
        MinimizeOutcome {
            y: self.y.clone(),
            value: self.value,
            value_err: self.value_err,
            opt_gap: self.opt_gap,
            iterations: self.iterations,
            hit_boundary: self.hit_boundary,
        }
    }
}

fn finish_report(
    tuple: &BodyTuple,
    oracle: SolveOracle,
    seed: u64,
    sol: CoreSolution,
) -> CapacityReport {
    let factors: Vec<f64> = (0..tuple.n())
        .map(|idx| {
            let i = idx + 1;
            let di = i.min(tuple.affine_dim(idx));
            if di == 0 {
                0.0
            } else {
                lambda_factor(i, di).expect("1 <= D(i) <= i")
            }
        })
        .collect();
    report_from_solution(sol, factors, oracle, seed)
}

/// Assembles the two-sided bracket from a solution and its lower-bound
/// factors: `mv_lower = cap·Πfactors/e^gap`, `mv_upper = cap`.
pub(crate) fn report_from_solution(
    sol: CoreSolution,
    factors: Vec<f64>,
    oracle: SolveOracle,
    seed: u64,
) -> CapacityReport {
    let cap = sol.log_value.exp();
    let product: f64 = factors.iter().product();
    CapacityReport {
        cap_estimate: cap,
        minimizer_y: sol.y,
        additive_gap: sol.additive_gap,
        mv_lower: cap * product / sol.additive_gap.exp(),
        mv_upper: cap,
        factors,
        oracle_mode: oracle.to_string(),
        iterations: sol.iterations,
        oracle_calls: sol.oracle_calls,
        seed,
        certified: sol.certified,
        zero_certificate: None,
    }
}

/// End-to-end mixed-volume approximation: decompose, certify each block's
/// capacity, and multiply the per-block brackets.
pub fn approx_mixed_volume(
    tuple: &BodyTuple,
    tol: f64,
    oracle: SolveOracle,
    seed: u64,
) -> Result<CapacityReport> {
    approx_mixed_volume_with(tuple, tol, oracle, seed, 100_000, &Limits::default())
}

/// [`approx_mixed_volume`] with explicit per-block budget and limits.
pub fn approx_mixed_volume_with(
    tuple: &BodyTuple,
    tol: f64,
    oracle: SolveOracle,
    seed: u64,
    budget: u64,
    limits: &Limits,
) -> Result<CapacityReport> {
    let n = tuple.n();
    let dec = decompose_with(tuple, limits)?;
    if let Some(cert) = dec.zero_certificate {
        return Ok(CapacityReport {
            cap_estimate: 0.0,
            minimizer_y: vec![0.0; n],
            additive_gap: 0.0,
            mv_lower: 0.0,
            mv_upper: 0.0,
            factors: Vec::new(),
            oracle_mode: oracle.to_string(),
            iterations: 0,
            oracle_calls: 0,
            seed,
            certified: true,
            zero_certificate: Some(cert.indices),
        });
    }
    let block_tol = tol / dec.blocks.len() as f64;
    let mut cap = 1.0f64;
    let mut gap = 0.0f64;
    let mut lower = 1.0f64;
    let mut upper = 1.0f64;
    let mut factors = Vec::new();
    let mut minimizer = vec![0.0; n];
    let mut iterations = 0u64;
    let mut calls = 0u64;
    let mut certified = true;
    for (bi, block) in dec.blocks.iter().enumerate() {
        let rep = minimize_capacity_with(
            &block.tuple,
            block_tol,
            oracle,
            budget,
            derive_seed(seed, bi as u64),
            SolveMethod::Ellipsoid,
            limits,
        )?;
        cap *= rep.cap_estimate;
        gap += rep.additive_gap;
        lower *= rep.mv_lower;
        upper *= rep.mv_upper;
        factors.extend(rep.factors.iter().copied());
        for (slot, &orig) in block.indices.iter().enumerate() {
            minimizer[orig] = rep.minimizer_y[slot];
        }
        iterations += rep.iterations;
        calls += rep.oracle_calls;
        certified &= rep.certified;
    }
    Ok(CapacityReport {
        cap_estimate: cap,
        minimizer_y: minimizer,
        additive_gap: gap,
        mv_lower: lower,
        mv_upper: upper,
        factors,
        oracle_mode: oracle.to_string(),
        iterations,
        oracle_calls: calls,
        seed,
        certified,
        zero_certificate: None,
    })
}
