//! Determinantal sibling of the mixed volume: exact mixed discriminants of
//! positive-semidefinite tuples, capacity of the determinant polynomial
//! through the shared solver, and the ellipsoid mixed-volume bracket that
//! links the two worlds.

use crate::bounds::g_factor;
use crate::mv_exact::POLARIZATION_MAX_N;
use crate::solver::{
    minimize_core, report_from_solution, CapacityProblem, CapacityReport, SolveMethod, SolveOracle,
};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// An n-tuple of n×n real symmetric positive-semidefinite matrices.
#[derive(Debug, Clone)]
pub struct MatrixTuple {
    mats: Vec<DMatrix<f64>>,
    n: usize,
}

impl MatrixTuple {
    /// Validates symmetry (1e-12 relative) and positive semidefiniteness
    /// (eigenvalues ≥ −1e-10 relative to the largest entry).
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = mats.len();
        if n == 0 {
            return Err(Error::InvalidParameter("matrix tuple is empty".into()));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.nrows().max(m.ncols()),
                });
            }
            let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("matrix {i} has a non-finite entry")));
            }
            let asym = (m - m.transpose()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if asym > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!(
                    "matrix {i} is not symmetric (max asymmetry {asym:.3e})"
                )));
            }
            let eig = m.clone().symmetric_eigenvalues();
            let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
            if min_eig < -1e-10 * scale {
                return Err(Error::InvalidParameter(format!(
                    "matrix {i} has negative eigenvalue {min_eig:.3e}"
                )));
            }
        }
        Ok(MatrixTuple { mats, n })
    }

    /// Diagonal tuple from the rows of a nonnegative matrix: the
    /// determinant polynomial then matches the box-tuple volume polynomial.
    pub fn diagonal(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mats: Result<Vec<DMatrix<f64>>> = rows
            .iter()
            .map(|r| {
                if r.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: r.len() });
                }
                if r.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "diagonal tuple needs nonnegative entries".into(),
                    ));
                }
                Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(r)))
            })
            .collect();
        MatrixTuple::new(mats?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    /// Rank of `Σ_{i∈subset} A_i` at a relative eigenvalue threshold.
    pub fn sum_rank(&self, subset: &[usize]) -> Result<usize> {
        let mut s = DMatrix::<f64>::zeros(self.n, self.n);
        for &i in subset {
            if i >= self.n {
                return Err(Error::DimensionMismatch { expected: self.n, got: i });
            }
            s += &self.mats[i];
        }
        let scale = s.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let eig = s.symmetric_eigenvalues();
        Ok(eig.iter().filter(|&&e| e > 1e-9 * scale).count())
    }
}

/// Determinant of the weighted sum `det(Σ x_i A_i)`.
pub fn det_poly_eval(tuple: &MatrixTuple, x: &[f64]) -> Result<f64> {
    let n = tuple.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut s = DMatrix::<f64>::zeros(n, n);
    for (xi, a) in x.iter().zip(tuple.matrices()) {
        s += a * *xi;
    }
    Ok(s.determinant())
}

/// Exact mixed discriminant `∂ⁿ/∂x_1…∂x_n det(Σ x_i A_i)` by subset
/// inclusion-exclusion over determinants.
pub fn mixed_discriminant_polarization(tuple: &MatrixTuple) -> Result<f64> {
    let n = tuple.n();
    if n > POLARIZATION_MAX_N {
        return Err(Error::ArityCap { n, cap: POLARIZATION_MAX_N, op: "polarization" });
    }
    let top = 1u32 << n;
    let terms: Vec<f64> = (1..top)
        .into_par_iter()
        .map(|mask| {
            let mut s = DMatrix::<f64>::zeros(n, n);
            for (i, a) in tuple.matrices().iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    s += a;
                }
            }
            let sign = if (n - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * s.determinant()
        })
        .collect();
    // serial fixed-order fold keeps the result bit-stable
    Ok(terms.iter().sum())
}

/// Full indecomposability in the determinantal sense: every proper
/// nonempty subset satisfies `rank(Σ_S A_i) > |S|`.
pub fn matrix_indecomposability_check(tuple: &MatrixTuple) -> Result<(bool, Option<Vec<usize>>)> {
    let n = tuple.n();
    let top = 1usize << n;
    let mut masks: Vec<usize> = (1..top - 1).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    for mask in masks {
        let subset: Vec<usize> = (0..n).filter(|&i| (mask >> i) & 1 == 1).collect();
        if tuple.sum_rank(&subset)? <= subset.len() {
            return Ok((false, Some(subset)));
        }
    }
    Ok((true, None))
}

/// The determinant objective as a capacity problem: exact value
/// `log det(Σ e^{y_i} A_i)` and gradient `γ_i = e^{y_i}·tr(M⁻¹ A_i)` via
/// Cholesky solves.
struct DetProblem<'a> {
    tuple: &'a MatrixTuple,
}

impl DetProblem<'_> {
    fn summed(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.tuple.n();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (yi, a) in y.iter().zip(self.tuple.matrices()) {
            m += a * yi.exp();
        }
        Ok(m)
    }
}

impl CapacityProblem for DetProblem<'_> {
    fn n(&self) -> usize {
        self.tuple.n()
    }

    fn value_exact(&self, y: &[f64]) -> Result<f64> {
        let m = self.summed(y)?;
        let chol = m.cholesky().ok_or_else(|| {
            Error::DegenerateTuple("weighted matrix sum is singular; the tuple decomposes".into())
        })?;
        Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    fn gamma_exact(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.tuple.n();
        let m = self.summed(y)?;
        let chol = m.cholesky().ok_or_else(|| {
            Error::DegenerateTuple("weighted matrix sum is singular; the tuple decomposes".into())
        })?;
        let mut gamma = Vec::with_capacity(n);
        for (yi, a) in y.iter().zip(self.tuple.matrices()) {
            let solved = chol.solve(a);
            gamma.push(yi.exp() * solved.trace());
        }
        let drift = (gamma.iter().sum::<f64>() - n as f64).abs();
        if drift > 1e-10 * n as f64 {
            return Err(Error::IllConditioned(format!(
                "determinant gradient drifts from Euler identity by {drift:.3e}"
            )));
        }
        Ok(gamma)
    }
}

/// Certified capacity of the determinant polynomial, with the factorial
/// lower-bound bracket `D ≥ (n!/nⁿ)·Cap`.
pub fn det_capacity(tuple: &MatrixTuple, tol: f64) -> Result<CapacityReport> {
    det_capacity_with(tuple, tol, 100_000, 0)
}

/// [`det_capacity`] with explicit iteration budget and seed (the oracle is
/// exact, so the seed only labels the report).
pub fn det_capacity_with(
    tuple: &MatrixTuple,
    tol: f64,
    budget: u64,
    seed: u64,
) -> Result<CapacityReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter("tolerance must lie in (0, 1)".into()));
    }
    let n = tuple.n();
    let (ok, witness) = matrix_indecomposability_check(tuple)?;
    if !ok {
        return Err(Error::NotIndecomposable { witness: witness.unwrap_or_default() });
    }
    let problem = DetProblem { tuple };
    // a-priori ball: substitution discriminants play the role of the
    // smallest substituted mixed volume
    let u = det_poly_eval(tuple, &vec![1.0; n])?;
    let mut stf = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut mats = tuple.matrices().to_vec();
            mats[j] = mats[i].clone();
            let sub = MatrixTuple { mats, n };
            stf = stf.min(mixed_discriminant_polarization(&sub)?);
        }
    }
    let r0 = if n == 1 {
        1.0
    } else if stf > 1e-300 {
        ((n as f64).sqrt() * (2.0 * u / stf).ln().max(0.0) + 1.0).min(25.0 * (n as f64).sqrt())
    } else {
        10.0 * (n as f64).sqrt()
    };
    let sol =
        minimize_core(&problem, r0, tol, SolveOracle::Exact, budget, seed, SolveMethod::Ellipsoid)?;
    // factorial bound factors: Π g(k) = n!/nⁿ exactly
    let factors: Vec<f64> = (1..=n).map(g_factor).collect();
    Ok(report_from_solution(sol, factors, SolveOracle::Exact, seed))
}

/// Unit-ball volume `v_n = π^{n/2}/Γ(n/2+1)` by the two-step recurrence.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Two-sided bound on the mixed volume of the ellipsoids `E_i = A_i(Ball)`
/// from the mixed discriminant of `Q_i = A_i A_iᵀ`:
/// classical bracket `3^{-(n+1)/2} v_n √D_cl ≤ V_cl ≤ v_n √D_cl`, returned
/// in the n!-scaled partial-derivative normalization used everywhere else.
pub fn barvinok_bracket(factors: &[DMatrix<f64>]) -> Result<(f64, f64)> {
    let n = factors.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty factor list".into()));
    }
    for (i, a) in factors.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.nrows().max(a.ncols()) });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("factor {i} has a non-finite entry")));
        }
    }
    let grams: Vec<DMatrix<f64>> = factors.iter().map(|a| a * a.transpose()).collect();
    let tuple = MatrixTuple::new(grams)?;
    let d_partial = mixed_discriminant_polarization(&tuple)?;
    // n ≤ 12, so the factorial is exact in f64
    let nf: f64 = (1..=n).map(|k| k as f64).product();
    let d_classical = (d_partial / nf).max(0.0);
    let upper_classical = unit_ball_volume(n) * d_classical.sqrt();
    let lower_classical = 3.0f64.powf(-((n + 1) as f64) / 2.0) * upper_classical;
    Ok((nf * lower_classical, nf * upper_classical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BodyTuple, ConvexBody, Limits};
    use crate::mv_exact::{mixed_volume_polarization_with, permanent_ryser};
    use crate::rng::stream_rng;
    use crate::solver::minimize_capacity;
    use rand::Rng;

    fn identity_tuple(n: usize) -> MatrixTuple {
        MatrixTuple::new(vec![DMatrix::identity(n, n); n]).unwrap()
    }

    fn basis_tuple(n: usize) -> MatrixTuple {
        let mats: Vec<DMatrix<f64>> = (0..n)
            .map(|i| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, i)] = 1.0;
                m
            })
            .collect();
        MatrixTuple::new(mats).unwrap()
    }

    fn random_psd_tuple(n: usize, ridge: f64, seed: u64) -> MatrixTuple {
        let mut rng = stream_rng(seed, 0);
        let mats: Vec<DMatrix<f64>> = (0..n)
            .map(|_| {
                let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                &b * b.transpose() + DMatrix::identity(n, n) * ridge
            })
            .collect();
        MatrixTuple::new(mats).unwrap()
    }

    #[test]
    fn tuple_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(MatrixTuple::new(vec![asym, DMatrix::identity(2, 2)]).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(MatrixTuple::new(vec![indef, DMatrix::identity(2, 2)]).is_err());
        assert!(MatrixTuple::new(vec![DMatrix::identity(3, 3); 2]).is_err());
        assert!(MatrixTuple::new(vec![DMatrix::identity(2, 2); 2]).is_ok());
    }

    #[test]
    fn det_poly_eval_examples() {
        let t = basis_tuple(3);
        let x = [2.0, 5.0, 0.5];
        assert!((det_poly_eval(&t, &x).unwrap() - 5.0).abs() < 1e-12);
        let t2 = identity_tuple(2);
        for (a, b) in [(1.0, 1.0), (0.3, 2.0), (4.0, 0.1)] {
            let want = (a + b) * (a + b);
            assert!((det_poly_eval(&t2, &[a, b]).unwrap() - want).abs() < 1e-12);
        }
        let t3 = random_psd_tuple(3, 0.1, 11);
        let mut s = DMatrix::<f64>::zeros(3, 3);
        for a in t3.matrices() {
            s += a;
        }
        assert!(
            (det_poly_eval(&t3, &[1.0, 1.0, 1.0]).unwrap() - s.determinant()).abs()
                < 1e-10 * s.determinant().abs().max(1.0)
        );
    }

    #[test]
    fn polarization_examples() {
        assert!((mixed_discriminant_polarization(&basis_tuple(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((mixed_discriminant_polarization(&identity_tuple(2)).unwrap() - 2.0).abs() < 1e-12);
        assert!((mixed_discriminant_polarization(&identity_tuple(3)).unwrap() - 6.0).abs() < 1e-12);
        // diagonal tuples reproduce permanents
        let mut rng = stream_rng(13, 0);
        for _ in 0..4 {
            let n = rng.gen_range(2..=4usize);
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()).collect();
            let t = MatrixTuple::diagonal(&rows).unwrap();
            let d = mixed_discriminant_polarization(&t).unwrap();
            let p = permanent_ryser(&rows).unwrap();
            assert!((d - p).abs() <= 1e-10 * p.max(1.0), "{d} vs {p}");
        }
    }

    #[test]
    fn polarization_is_conjugation_invariant_and_nonnegative() {
        let mut rng = stream_rng(17, 0);
        for trial in 0..5 {
            let n = 3;
            let t = random_psd_tuple(n, 0.05, 100 + trial);
            let d = mixed_discriminant_polarization(&t).unwrap();
            assert!(d >= -1e-10, "mixed discriminant must be nonnegative, got {d}");
            // random orthogonal matrix from QR
            let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            let q = raw.qr().q();
            let conj: Vec<DMatrix<f64>> =
                t.matrices().iter().map(|a| &q.transpose() * a * &q).collect();
            let tc = MatrixTuple::new(conj).unwrap();
            let dc = mixed_discriminant_polarization(&tc).unwrap();
            assert!((d - dc).abs() <= 1e-9 * d.abs().max(1.0), "trial {trial}: {d} vs {dc}");
        }
    }

    #[test]
    fn capacity_of_doubly_stochastic_diagonal_tuple() {
        let rows = vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.3, 0.2, 0.5]];
        let t = MatrixTuple::diagonal(&rows).unwrap();
        let rep = det_capacity(&t, 1e-4).unwrap();
        assert!(rep.certified);
        assert!((rep.cap_estimate - 1.0).abs() <= 1e-3, "cap {}", rep.cap_estimate);
        // same polynomial as the box tuple: capacities agree
        let bodies: Vec<ConvexBody> =
            rows.iter().map(|r| ConvexBody::cuboid(vec![0.0; 3], r.clone()).unwrap()).collect();
        let bt = BodyTuple::new(bodies).unwrap();
        let box_rep = minimize_capacity(&bt, 1e-4, SolveOracle::Exact, 100_000, 0).unwrap();
        assert!((rep.cap_estimate - box_rep.cap_estimate).abs() <= 3e-4);
    }

    #[test]
    fn capacity_brackets_the_discriminant() {
        // perturbed basis tuple from the examples
        let mats: Vec<DMatrix<f64>> = (0..3)
            .map(|i| {
                let mut m = DMatrix::identity(3, 3) * 0.01;
                m[(i, i)] += 1.0;
                m
            })
            .collect();
        let t = MatrixTuple::new(mats).unwrap();
        let d = mixed_discriminant_polarization(&t).unwrap();
        let rep = det_capacity(&t, 1e-5).unwrap();
        let n_pow = 27.0 / 6.0; // n^n/n!
        assert!(
            d <= rep.cap_estimate * (1.0 + 1e-6) && rep.cap_estimate <= d * n_pow * (1.0 + 1e-4),
            "cap {} vs D {d}",
            rep.cap_estimate
        );
        // random PSD sweeps: D sits inside the certified bracket
        for trial in 0..4 {
            let n = if trial % 2 == 0 { 3 } else { 4 };
            let t = random_psd_tuple(n, 0.2, 200 + trial as u64);
            let d = mixed_discriminant_polarization(&t).unwrap();
            let rep = det_capacity(&t, 1e-4).unwrap();
            assert!(
                rep.mv_lower <= d * (1.0 + 1e-6) && d <= rep.mv_upper * (1.0 + 1e-6),
                "trial {trial}: bracket [{}, {}] vs D {d}",
                rep.mv_lower,
                rep.mv_upper
            );
        }
    }

    #[test]
    fn identity_tuple_hits_factorial_equality() {
        let t = identity_tuple(3);
        let rep = det_capacity(&t, 1e-6).unwrap();
        assert!(rep.certified);
        // symmetry: minimizer at the origin, cap = det(3I) = 27
        for yi in &rep.minimizer_y {
            assert!(yi.abs() < 1e-3);
        }
        assert!((rep.cap_estimate - 27.0).abs() <= 27.0 * 1e-5);
        let d = mixed_discriminant_polarization(&t).unwrap();
        assert!((d - 6.0).abs() < 1e-10);
        // factorial bound is tight for equal matrices
        let ratio = d / rep.cap_estimate;
        assert!((ratio - 6.0 / 27.0).abs() <= 1e-4 * ratio);
    }

    #[test]
    fn decomposable_tuple_is_rejected() {
        let mut e11 = DMatrix::<f64>::zeros(2, 2);
        e11[(0, 0)] = 1.0;
        let t = MatrixTuple::new(vec![e11.clone(), e11]).unwrap();
        let err = det_capacity(&t, 1e-4).unwrap_err();
        match err {
            Error::NotIndecomposable { witness } => assert_eq!(witness, vec![0]),
            other => panic!("expected indecomposability error, got {other:?}"),
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn disk_bracket_matches_partial_derivative_normalization() {
        let (lo, hi) =
            barvinok_bracket(&[DMatrix::identity(2, 2), DMatrix::identity(2, 2)]).unwrap();
        // D(I,I) = 2 in the partial normalization, so the classical root is
        // 1 and the converted bracket tops out at 2π
        let want_hi = 2.0 * std::f64::consts::PI;
        assert!((hi - want_hi).abs() < 1e-12, "hi {hi}");
        let want_lo = want_hi * 3.0f64.powf(-1.5);
        assert!((lo - want_lo).abs() < 1e-12, "lo {lo}");
    }

    #[test]
    fn polygonal_disks_land_in_the_bracket() {
        // regular 256-gons approximating two unit disks
        let k = 256usize;
        let verts: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let limits = Limits { vertex_budget: 200_000, ..Limits::default() };
        let gon = ConvexBody::vpolytope_with(verts, &limits).unwrap();
        let t = BodyTuple::new(vec![gon.clone(), gon]).unwrap();
        let mv = mixed_volume_polarization_with(&t, &limits).unwrap().value;
        let (lo, hi) =
            barvinok_bracket(&[DMatrix::identity(2, 2), DMatrix::identity(2, 2)]).unwrap();
        assert!(mv >= lo * (1.0 - 1e-3) && mv <= hi * (1.0 + 1e-3), "mv {mv} outside [{lo}, {hi}]");
        // equal ellipsoids attain the upper bound; the polygon gap is the
        // O(1/k²) inscribed-area deficit
        assert!((mv - hi).abs() <= 3e-4 * hi, "mv {mv} vs upper {hi}");
    }

    #[test]
    fn flat_factor_and_disk_stay_bracketed() {
        // one factor collapses the ball to a segment: D(diag(1,0), I) = 1,
        // mixed volume of segment and disk = 4 in the n!-scaled convention
        let mut a = DMatrix::identity(2, 2);
        a[(1, 1)] = 0.0;
        let (lo, hi) = barvinok_bracket(&[a, DMatrix::identity(2, 2)]).unwrap();
        let mv = 4.0;
        assert!(lo <= mv && mv <= hi, "mv {mv} outside [{lo}, {hi}]");
    }

    #[test]
    fn parallel_flat_factors_collapse_the_bracket() {
        let mut a = DMatrix::identity(2, 2);
        a[(1, 1)] = 0.0;
        let (lo, hi) = barvinok_bracket(&[a.clone(), a]).unwrap();
        assert!(lo.abs() < 1e-14 && hi.abs() < 1e-7, "bracket [{lo}, {hi}]");
    }
}
