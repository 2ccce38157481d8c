//! Release-gating self-verification: twelve independent checks spanning the
//! exact oracles, the capacity solver, the closed-form bound factors, the
//! scaling loop, and the determinantal bridge. Each check reports a single
//! pass/fail line suitable for CI logs.

use crate::bounds::{g_factor, lambda_factor, newton_check, newton_polytope_degrees, vdw_factor};
use crate::capacity::OracleMode;
use crate::discriminant::barvinok_bracket;
use crate::geometry::{minkowski_combine, BodyTuple, ConvexBody, Limits};
use crate::mv_exact::{mixed_volume_auto_with, mixed_volume_polarization, permanent_ryser};
use crate::rational::{g_product_exact, vdw_ratio_exact};
use crate::rng::stream_rng;
use crate::scaling::{
    near_optimality_check, second_derivative_probe, sinkhorn_iterate, FunctionalClass,
    MinkowskiFunctional, PositiveFunctional, ScalingState,
};
use crate::solver::{minimize_capacity, minimize_capacity_with, SolveMethod, SolveOracle};
use crate::{capacity, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Verdict of one self-test criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: f64,
}

impl CriterionResult {
    /// One-line summary, aligned for log output.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2}  {:<38} {}  [{:>7.0} ms]  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.millis,
            self.detail
        )
    }
}

fn run(
    id: usize,
    name: &'static str,
    f: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok((p, d)) => (p, d),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name, passed, detail, millis: start.elapsed().as_secs_f64() * 1e3 }
}

// ---------------------------------------------------------------------------
// random instance builders (all seeded; full-dimensional unless stated)

fn rand_full_box(n: usize, rng: &mut impl Rng) -> Result<ConvexBody> {
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let upper: Vec<f64> = lower.iter().map(|&l| l + rng.gen_range(0.3..1.6)).collect();
    ConvexBody::cuboid(lower, upper)
}

/// Box with zero width in one coordinate: affine dimension `n - 1`.
fn rand_flat_box(n: usize, flat: usize, rng: &mut impl Rng) -> Result<ConvexBody> {
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let upper: Vec<f64> = lower
        .iter()
        .enumerate()
        .map(|(j, &l)| if j == flat { l } else { l + rng.gen_range(0.3..1.6) })
        .collect();
    ConvexBody::cuboid(lower, upper)
}

fn rand_zonotope(n: usize, gens: usize, rng: &mut impl Rng) -> Result<ConvexBody> {
    loop {
        let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let g: Vec<Vec<f64>> =
            (0..gens).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let z = ConvexBody::zonotope(center, g)?;
        if z.affine_dimension() == n {
            return Ok(z);
        }
    }
}

fn rand_vpolytope(n: usize, verts: usize, rng: &mut impl Rng) -> Result<ConvexBody> {
    loop {
        let vs: Vec<Vec<f64>> =
            (0..verts).map(|_| (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()).collect();
        let p = ConvexBody::vpolytope(vs)?;
        if p.affine_dimension() == n {
            return Ok(p);
        }
    }
}

fn box_tuple_from_rows(rows: &[Vec<f64>]) -> Result<BodyTuple> {
    let n = rows.len();
    let bodies: Result<Vec<ConvexBody>> =
        rows.iter().map(|r| ConvexBody::cuboid(vec![0.0; n], r.clone())).collect();
    BodyTuple::new(bodies?)
}

fn sinkhorn_balance(a: &mut [Vec<f64>], iters: usize) {
    let n = a.len();
    for _ in 0..iters {
        for row in a.iter_mut() {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        for j in 0..n {
            let s: f64 = a.iter().map(|r| r[j]).sum();
            a.iter_mut().for_each(|r| r[j] /= s);
        }
    }
}

/// Coefficients of the degree-`deg` polynomial through `(i, values[i])`,
/// `i = 0..=deg`, low degree first.
fn fit_polynomial(values: &[f64]) -> Result<Vec<f64>> {
    let m = values.len();
    let vander = DMatrix::from_fn(m, m, |r, c| (r as f64).powi(c as i32));
    let rhs = DVector::from_column_slice(values);
    let sol = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned("singular interpolation system".into()))?;
    Ok(sol.iter().copied().collect())
}

// ---------------------------------------------------------------------------
// the twelve criteria

/// 1. Mixed volume of an axis-box tuple equals the permanent of the width
///    matrix, at 1e-9 relative tolerance over 50 random 4x4 instances, in
///    under five seconds.
pub fn criterion_box_permanent_agreement() -> CriterionResult {
    run(1, "box tuple mixed volume = permanent", || {
        let start = Instant::now();
        let mut worst = 0.0f64;
        for trial in 0..50 {
            let mut rng = stream_rng(0xAC01, trial);
            let rows: Vec<Vec<f64>> =
                (0..4).map(|_| (0..4).map(|_| rng.gen_range(0.0..2.0)).collect()).collect();
            let tuple = box_tuple_from_rows(&rows)?;
            let mv = mixed_volume_polarization(&tuple)?.value;
            let p = permanent_ryser(&rows)?;
            worst = worst.max((mv - p).abs() / p.max(1e-12));
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((
            worst <= 1e-9 && secs < 5.0,
            format!("max rel dev {worst:.2e} over 50 instances, {secs:.2}s"),
        ))
    })
}

/// 2. Capacity of a doubly stochastic box tuple is 1 within 1e-3, and the
///    factorial bound brackets the permanent: n!/n^n <= perm <= Cap.
pub fn criterion_doubly_stochastic_capacity() -> CriterionResult {
    run(2, "doubly stochastic capacity = 1", || {
        let mut worst_cap = 0.0f64;
        let mut bracket_ok = true;
        for trial in 0..20u64 {
            let mut rng = stream_rng(0xAC02, trial);
            let mut rows: Vec<Vec<f64>> =
                (0..3).map(|_| (0..3).map(|_| rng.gen_range(0.1..1.2)).collect()).collect();
            sinkhorn_balance(&mut rows, 400);
            let tuple = box_tuple_from_rows(&rows)?;
            let rep = minimize_capacity(&tuple, 1e-4, SolveOracle::Exact, 100_000, trial)?;
            worst_cap = worst_cap.max((rep.cap_estimate - 1.0).abs());
            let perm = permanent_ryser(&rows)?;
            bracket_ok &= perm >= vdw_factor(3) - 1e-9 && perm <= rep.cap_estimate * (1.0 + 1e-9);
        }
        Ok((
            worst_cap <= 1e-3 && bracket_ok,
            format!(
                "max |cap-1| = {worst_cap:.2e}, factorial bracket {}",
                if bracket_ok { "held" } else { "BROKEN" }
            ),
        ))
    })
}

/// 3. Translated dilates of one body attain the factorial ratio:
///    MV/Cap = n!/n^n within 1e-4 for n = 2..4.
pub fn criterion_dilate_translate_equality() -> CriterionResult {
    run(3, "dilated translates hit n!/n^n", || {
        let mut worst = 0.0f64;
        for n in 2..=4usize {
            for trial in 0..3 {
                let mut rng = stream_rng(0xAC03, (n * 10 + trial) as u64);
                let base = rand_zonotope(n, n + 1, &mut rng)?;
                let bodies: Result<Vec<ConvexBody>> = (0..n)
                    .map(|_| {
                        let a = rng.gen_range(0.6..1.8);
                        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        base.scale(a)?.translate(&t)
                    })
                    .collect();
                let tuple = BodyTuple::new(bodies?)?;
                let mv = mixed_volume_auto_with(&tuple, &Limits::default())?.value;
                let rep =
                    minimize_capacity(&tuple, 1e-6, SolveOracle::Exact, 200_000, trial as u64)?;
                worst = worst.max((mv / rep.cap_estimate - vdw_factor(n)).abs());
            }
        }
        Ok((worst <= 1e-4, format!("max |MV/Cap - n!/n^n| = {worst:.2e}")))
    })
}

/// 4. Certified sandwich on random tuples (n <= 5): the factor-weighted
///    lower bound and the capacity estimate bracket the exact mixed volume
///    with 1e-6 relative slack.
pub fn criterion_capacity_sandwich() -> CriterionResult {
    run(4, "capacity sandwich brackets exact MV", || {
        let mut checked = 0usize;
        let mut failures = 0usize;
        let mut worst_rel = 0.0f64;
        let plan: [(usize, usize); 4] = [(2, 30), (3, 30), (4, 25), (5, 15)];
        for (n, count) in plan {
            for trial in 0..count {
                let mut rng = stream_rng(0xAC04, (n * 1000 + trial) as u64);
                let mut bodies: Vec<ConvexBody> = Vec::with_capacity(n);
                if n <= 3 {
                    for i in 0..n {
                        bodies.push(match (trial + i) % 3 {
                            0 => rand_full_box(n, &mut rng)?,
                            1 => rand_zonotope(n, n, &mut rng)?,
                            _ => rand_vpolytope(n, n + 3, &mut rng)?,
                        });
                    }
                } else {
                    // boxes keep exact evaluation linear-time at n = 4, 5;
                    // one flat body exercises aff(i) < n in the factors
                    for _ in 0..n {
                        bodies.push(rand_full_box(n, &mut rng)?);
                    }
                    if trial % 2 == 0 {
                        bodies[n - 1] = rand_flat_box(n, trial % n, &mut rng)?;
                    }
                }
                let tuple = BodyTuple::new(bodies)?;
                let mv = mixed_volume_auto_with(&tuple, &Limits::default())?.value;
                let tol = if n <= 3 { 3e-3 } else { 1e-4 };
                let rep = minimize_capacity(
                    &tuple,
                    tol,
                    SolveOracle::Exact,
                    200_000,
                    (n * 777 + trial) as u64,
                )?;
                checked += 1;
                let lo_ok = rep.mv_lower <= mv * (1.0 + 1e-6) + 1e-12;
                let hi_ok = mv <= rep.cap_estimate * (1.0 + 1e-6) + 1e-12;
                if !(lo_ok && hi_ok) {
                    failures += 1;
                    let rel =
                        if !lo_ok { rep.mv_lower / mv - 1.0 } else { mv / rep.cap_estimate - 1.0 };
                    worst_rel = worst_rel.max(rel);
                }
            }
        }
        Ok((
            failures == 0 && checked == 100,
            format!(
                "{}/{checked} brackets held (worst excess {worst_rel:.2e})",
                checked - failures
            ),
        ))
    })
}

/// 5. Closed forms of the bound factors match numeric minimisation to
///    1e-10 up to order 30, and the factorial product identity is exact in
///    rational arithmetic for n <= 12.
pub fn criterion_factor_closed_forms() -> CriterionResult {
    run(5, "bound-factor closed forms", || {
        let mut worst = 0.0f64;
        for k in 1..=30usize {
            worst = worst.max((lambda_factor(k, k)? - g_factor(k)).abs());
        }
        for n in 2..=30usize {
            let closed = 1.0 / (1.0 + (2.0 * (n as f64 - 1.0) / n as f64).sqrt());
            worst = worst.max((lambda_factor(n, 2)? - closed).abs());
        }
        let mut exact_ok = true;
        for n in 1..=12usize {
            exact_ok &= g_product_exact(n) == vdw_ratio_exact(n);
        }
        Ok((
            worst <= 1e-10 && exact_ok,
            format!(
                "max closed-form dev {worst:.2e}; rational product identity {}",
                if exact_ok { "exact" } else { "BROKEN" }
            ),
        ))
    })
}

/// 6. Quadratic mixed-volume inequality on random tuples (slack
///    1e-8 * scale) and log-concavity of two-body coefficient sequences.
pub fn criterion_quadratic_and_log_concavity() -> CriterionResult {
    run(6, "quadratic inequality and log-concavity", || {
        let mut af_failures = 0usize;
        for trial in 0..100 {
            let n = 2 + (trial % 3);
            let mut rng = stream_rng(0xAC06, trial as u64);
            let bodies: Result<Vec<ConvexBody>> = (0..n)
                .map(|i| {
                    if (trial + i) % 2 == 0 {
                        rand_full_box(n, &mut rng)
                    } else {
                        rand_zonotope(n, n, &mut rng)
                    }
                })
                .collect();
            let tuple = BodyTuple::new(bodies?)?;
            let v12 = mixed_volume_auto_with(&tuple, &Limits::default())?.value;
            let with = |i: usize, j: usize| -> Result<f64> {
                let mut bs = tuple.bodies().to_vec();
                bs[j] = bs[i].clone();
                Ok(mixed_volume_auto_with(&BodyTuple::new(bs)?, &Limits::default())?.value)
            };
            let v11 = with(0, 1)?;
            let v22 = with(1, 0)?;
            let scale = v12.abs().max(v11.abs()).max(v22.abs()).max(1.0);
            if v11 * v22 > v12 * v12 + 1e-8 * scale * scale {
                af_failures += 1;
            }
        }
        let mut newton_failures = 0usize;
        for trial in 0..20 {
            let n = 2 + (trial % 3);
            let mut rng = stream_rng(0xAC66, trial as u64);
            let k_body = rand_full_box(n, &mut rng)?;
            let l_body = rand_zonotope(n, n, &mut rng)?;
            // u -> vol(u*K + L) sampled at u = 0..n, fitted exactly
            let mut values = Vec::with_capacity(n + 1);
            for u in 0..=n {
                let sum = minkowski_combine(&[u as f64, 1.0], &[k_body.clone(), l_body.clone()])?;
                values.push(sum.volume()?);
            }
            let coeffs = fit_polynomial(&values)?;
            let clamped: Vec<f64> = coeffs.iter().map(|&c| c.max(0.0)).collect();
            if !newton_check(&clamped, n)? {
                newton_failures += 1;
            }
        }
        Ok((
            af_failures == 0 && newton_failures == 0,
            format!("quadratic held 100/100 minus {af_failures}; log-concavity held 20/20 minus {newton_failures}"),
        ))
    })
}

/// 7. Solver value matches a dense zero-sum grid search (step 0.01) within
///    1e-3 on n = 3 instances; the two methods agree within 2*tol; each
///    instance solves in under a minute.
pub fn criterion_solver_grid_crosscheck() -> CriterionResult {
    run(7, "solver matches dense grid search", || {
        let mut rng = stream_rng(0xAC07, 0);
        let mut rows: Vec<Vec<f64>> =
            (0..3).map(|_| (0..3).map(|_| rng.gen_range(0.3..1.2)).collect()).collect();
        sinkhorn_balance(&mut rows, 200);
        let instances: Vec<BodyTuple> = vec![
            box_tuple_from_rows(&rows)?,
            BodyTuple::new(vec![
                rand_zonotope(3, 3, &mut rng)?,
                rand_zonotope(3, 3, &mut rng)?,
                rand_zonotope(3, 3, &mut rng)?,
            ])?,
        ];
        let tol = 1e-4;
        let mut worst_grid = 0.0f64;
        let mut worst_pair = 0.0f64;
        let mut slowest = 0.0f64;
        for (idx, tuple) in instances.iter().enumerate() {
            let t0 = Instant::now();
            let rep = minimize_capacity(tuple, tol, SolveOracle::Exact, 200_000, idx as u64)?;
            let pg = minimize_capacity_with(
                tuple,
                tol,
                SolveOracle::Exact,
                200_000,
                idx as u64,
                SolveMethod::ProjectedGradient,
                &Limits::default(),
            )?;
            let solved = rep.cap_estimate.ln();
            worst_pair = worst_pair.max((solved - pg.cap_estimate.ln()).abs());
            let steps = 400i64; // a, b in [-2, 2] at 0.01
            let grid_min = (-steps..=steps)
                .into_par_iter()
                .map(|ai| {
                    let a = ai as f64 * 0.01;
                    let mut row_min = f64::INFINITY;
                    for bi in -steps..=steps {
                        let b = bi as f64 * 0.01;
                        let y = [a, b, -a - b];
                        if let Ok((v, _)) = capacity::objective_eval(tuple, &y, &OracleMode::Exact)
                        {
                            row_min = row_min.min(v);
                        }
                    }
                    row_min
                })
                .reduce(|| f64::INFINITY, f64::min);
            worst_grid = worst_grid.max((solved - grid_min).abs());
            slowest = slowest.max(t0.elapsed().as_secs_f64());
        }
        Ok((
            worst_grid <= 1e-3 && worst_pair <= 2.0 * tol && slowest < 60.0,
            format!(
                "grid dev {worst_grid:.2e}, method dev {worst_pair:.2e}, slowest {slowest:.1}s"
            ),
        ))
    })
}

/// 8. With sampling oracles (1e5 draws per call) the reported bracket
///    contains the exact permanent in at least 75% of 20 seeded runs over
///    10 random box tuples.
pub fn criterion_sampled_bracket_coverage() -> CriterionResult {
    run(8, "sampled-oracle bracket coverage", || {
        let mut hits = 0usize;
        for trial in 0..10u64 {
            let mut rng = stream_rng(0xAC08, trial);
            let rows: Vec<Vec<f64>> =
                (0..3).map(|_| (0..3).map(|_| rng.gen_range(0.2..1.5)).collect()).collect();
            let tuple = box_tuple_from_rows(&rows)?;
            let perm = permanent_ryser(&rows)?;
            for seed in 0..2u64 {
                let rep = minimize_capacity(
                    &tuple,
                    0.05,
                    SolveOracle::Mc { samples: 100_000 },
                    100_000,
                    1000 + trial * 2 + seed,
                )?;
                let hi = rep.mv_upper * rep.additive_gap.exp();
                if rep.mv_lower <= perm * (1.0 + 1e-9) && perm <= hi * (1.0 + 1e-9) {
                    hits += 1;
                }
            }
        }
        Ok((hits >= 15, format!("bracket contained the permanent in {hits}/20 runs")))
    })
}

/// 9. The scaling iteration is monotone on 50 random instances, and the
///    near-optimality bound holds at solver-certified near-minimizers.
pub fn criterion_scaling_monotone_near_optimal() -> CriterionResult {
    run(9, "scaling monotone; near-optimality bound", || {
        let mut violations = 0usize;
        for trial in 0..50 {
            let n = 2 + (trial % 3);
            let mut rng = stream_rng(0xAC09, trial as u64);
            let bodies: Result<Vec<ConvexBody>> = (0..n)
                .map(|i| {
                    if (trial + i) % 2 == 0 {
                        rand_full_box(n, &mut rng)
                    } else {
                        rand_zonotope(n, n, &mut rng)
                    }
                })
                .collect();
            let tuple = BodyTuple::new(bodies?)?;
            let f = MinkowskiFunctional::new(&tuple);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..2.5)).collect();
            match sinkhorn_iterate(&f, FunctionalClass::RootConcave, &x0, 40, 1e-7) {
                Ok(_) => {}
                Err(Error::ClassViolation { .. }) => violations += 1,
                Err(e) => return Err(e),
            }
        }
        let mut bound_failures = 0usize;
        for trial in 0..12 {
            let n = 2 + (trial % 3);
            let mut rng = stream_rng(0xAC99, trial as u64);
            let bodies: Result<Vec<ConvexBody>> =
                (0..n).map(|_| rand_full_box(n, &mut rng)).collect();
            let tuple = BodyTuple::new(bodies?)?;
            let rep = minimize_capacity(&tuple, 1e-3, SolveOracle::Exact, 100_000, trial as u64)?;
            let f = MinkowskiFunctional::new(&tuple);
            let x: Vec<f64> = rep.minimizer_y.iter().map(|&y| y.exp()).collect();
            let state = ScalingState::evaluate(&f, &x)?;
            let eps = rep.additive_gap.clamp(1e-9, 0.1);
            match near_optimality_check(&state, eps) {
                Ok(_) => {}
                Err(Error::ClassViolation { .. }) => bound_failures += 1,
                Err(e) => return Err(e),
            }
        }
        Ok((
            violations == 0 && bound_failures == 0,
            format!("monotone 50/50 minus {violations}; bound held 12/12 minus {bound_failures}"),
        ))
    })
}

/// 10. Log-coordinate restrictions have curvature in
///     [0, min(aff(i), deg/4 + 1e-3)] on 100 random instances.
pub fn criterion_restriction_curvature() -> CriterionResult {
    run(10, "restriction curvature bounds", || {
        let mut failures = 0usize;
        let mut worst_excess = f64::NEG_INFINITY;
        for trial in 0..100 {
            let n = 2 + (trial % 3);
            let mut rng = stream_rng(0xAC10, trial as u64);
            let mut bodies: Vec<ConvexBody> = Vec::with_capacity(n);
            for i in 0..n {
                bodies.push(if (trial + i) % 2 == 0 {
                    rand_full_box(n, &mut rng)?
                } else {
                    rand_zonotope(n, n, &mut rng)?
                });
            }
            if n >= 3 && trial % 4 == 0 {
                bodies[n - 1] = rand_flat_box(n, trial % n, &mut rng)?;
            }
            let tuple = BodyTuple::new(bodies)?;
            let f = MinkowskiFunctional::new(&tuple);
            let i = trial % n;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..2.2)).collect();
            let probe = second_derivative_probe(&f, FunctionalClass::RootConcave, &x, i)?;
            let bound = (tuple.affine_dim(i) as f64).min(f.homogeneity() as f64 / 4.0 + 1e-3);
            let below = probe.estimate >= -1e-9;
            let above = probe.estimate <= bound + 1e-6;
            if !(below && above) {
                failures += 1;
            }
            worst_excess = worst_excess.max(probe.estimate - bound);
        }
        Ok((
            failures == 0,
            format!("held 100/100 minus {failures}; max estimate-bound = {worst_excess:.2e}"),
        ))
    })
}

/// 11. Lattice-polytope tuples have integer mixed volume (within 1e-6)
///     bounded by the product of coordinate-sum degrees.
pub fn criterion_lattice_integrality() -> CriterionResult {
    run(11, "lattice tuple integrality and degree bound", || {
        let mut worst_frac = 0.0f64;
        let mut bound_ok = true;
        let mut checked = 0usize;
        for trial in 0..30u64 {
            let n = 2 + (trial as usize % 3);
            let mut rng = stream_rng(0xAC11, trial);
            let mut bodies: Vec<ConvexBody> = Vec::with_capacity(n);
            for i in 0..n {
                let body = match (trial as usize + i) % 3 {
                    0 => {
                        // integer box in the nonnegative orthant
                        let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(0..3) as f64).collect();
                        let upper: Vec<f64> =
                            lower.iter().map(|&l| l + rng.gen_range(0..3) as f64).collect();
                        ConvexBody::cuboid(lower, upper)?
                    }
                    1 => {
                        // lattice zonotope: integer base corner plus
                        // nonnegative integer generators
                        let gens: Vec<Vec<f64>> = (0..n)
                            .map(|_| (0..n).map(|_| rng.gen_range(0..3) as f64).collect())
                            .collect();
                        let base: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
                        ConvexBody::zonotope(base, gens)?
                    }
                    _ => {
                        let verts: Vec<Vec<f64>> = (0..n + 2)
                            .map(|_| (0..n).map(|_| rng.gen_range(0..4) as f64).collect())
                            .collect();
                        ConvexBody::vpolytope(verts)?
                    }
                };
                bodies.push(body);
            }
            let tuple = BodyTuple::new(bodies)?;
            let mv = mixed_volume_auto_with(&tuple, &Limits::default())?.value;
            let deg = newton_polytope_degrees(&tuple)?;
            worst_frac = worst_frac.max((mv - mv.round()).abs());
            bound_ok &= mv <= deg.product_bound + 1e-6;
            checked += 1;
        }
        Ok((
            worst_frac <= 1e-6 && bound_ok && checked == 30,
            format!(
                "max distance to integer {worst_frac:.2e}; degree bound {}",
                if bound_ok { "held" } else { "BROKEN" }
            ),
        ))
    })
}

/// 12. Polygonal-ellipse mixed volumes land inside the discriminant
///     bracket for 20 random ellipse pairs.
pub fn criterion_ellipse_bracket() -> CriterionResult {
    run(12, "ellipse pairs inside discriminant bracket", || {
        let k = 256usize;
        let limits = Limits { vertex_budget: 200_000, ..Limits::default() };
        let mut failures = 0usize;
        for trial in 0..20u64 {
            let mut rng = stream_rng(0xAC12, trial);
            let mut factor = || -> DMatrix<f64> {
                loop {
                    let a = DMatrix::<f64>::from_fn(2, 2, |_, _| rng.gen_range(-1.5..1.5));
                    if a.determinant().abs() >= 0.3 {
                        return a;
                    }
                }
            };
            let a1 = factor();
            let a2 = factor();
            let gon = |a: &DMatrix<f64>| -> Result<ConvexBody> {
                let verts: Vec<Vec<f64>> = (0..k)
                    .map(|j| {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                        let p = a * DVector::from_column_slice(&[th.cos(), th.sin()]);
                        vec![p[0], p[1]]
                    })
                    .collect();
                ConvexBody::vpolytope_with(verts, &limits)
            };
            let tuple = BodyTuple::new(vec![gon(&a1)?, gon(&a2)?])?;
            let mv = mixed_volume_auto_with(&tuple, &limits)?.value;
            let (lo, hi) = barvinok_bracket(&[a1, a2])?;
            if !(mv >= lo * (1.0 - 1e-3) && mv <= hi * (1.0 + 1e-3)) {
                failures += 1;
            }
        }
        Ok((failures == 0, format!("bracket held for {}/20 ellipse pairs", 20 - failures)))
    })
}

/// The criteria with their ids, for selective execution.
pub fn run_all_named() -> Vec<(usize, fn() -> CriterionResult)> {
    vec![
        (1, criterion_box_permanent_agreement as fn() -> CriterionResult),
        (2, criterion_doubly_stochastic_capacity),
        (3, criterion_dilate_translate_equality),
        (4, criterion_capacity_sandwich),
        (5, criterion_factor_closed_forms),
        (6, criterion_quadratic_and_log_concavity),
        (7, criterion_solver_grid_crosscheck),
        (8, criterion_sampled_bracket_coverage),
        (9, criterion_scaling_monotone_near_optimal),
        (10, criterion_restriction_curvature),
        (11, criterion_lattice_integrality),
        (12, criterion_ellipse_bracket),
    ]
}

/// Runs all twelve criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    run_all_named().into_iter().map(|(_, f)| f()).collect()
}

/// True iff every criterion passed.
pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.passed)
}
