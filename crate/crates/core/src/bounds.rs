//! Closed-form lower-bound factors for mixed volumes.
//!
//! The factor zoo: truncated-binomial polynomials `sv_{n,k}`, their
//! minimised ratios `λ(n,k) = (min_{x>0} sv_{n,k}(x)/x)^{-1}`, the special
//! values `g(k) = ((k-1)/k)^(k-1)` with `prod g(k) = n!/n^n`, Newton-type
//! log-concavity checks for univariate restrictions, and the reports that
//! turn a capacity value into certified mixed-volume lower bounds.

use crate::geometry::{BodyTuple, Limits};
use crate::{Error, Result};

/// `C(n, i)` as a double, stable for the sizes used here.
fn binomial_f64(n: usize, i: usize) -> f64 {
    let mut v = 1.0f64;
    for j in 1..=i {
        v *= (n - i + j) as f64 / j as f64;
    }
    v
}

fn factorial_f64(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `n!/n^n` as a double, computed as a product of ratios `i/n`.
pub fn vdw_factor(n: usize) -> f64 {
    (1..=n).map(|i| i as f64 / n as f64).product()
}

/// `g(k) = ((k-1)/k)^(k-1)`, with `g(1) = 1` (the `0^0 = 1` convention).
pub fn g_factor(k: usize) -> f64 {
    if k <= 1 {
        1.0
    } else {
        (((k - 1) as f64) / k as f64).powi(k as i32 - 1)
    }
}

/// Evaluates `sv_{n,k}(x) = 1 + sum_{1<=i<=k} (x/n)^i C(n,i)` by term
/// recurrence (no explicit binomials, so large `n` is fine).
pub fn sv_eval(n: usize, k: usize, x: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("sv needs 1 <= k <= n, got ({n}, {k})")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter("sv argument must be >= 0".into()));
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for i in 1..=k {
        term *= x * (n - i + 1) as f64 / (n as f64 * i as f64);
        sum += term;
    }
    Ok(sum)
}

/// `phi(x) = x sv'(x) - sv(x)` and `phi'(x)`; the minimiser of `sv(x)/x`
/// is the unique positive root of `phi`.
fn sv_ratio_stationarity(n: usize, k: usize, x: f64) -> (f64, f64) {
    let mut term = 1.0f64; // (x/n)^i C(n,i)
    let mut phi = -1.0f64;
    let mut dphi = 0.0f64;
    for i in 1..=k {
        term *= x * (n - i + 1) as f64 / (n as f64 * i as f64);
        phi += (i as f64 - 1.0) * term;
        dphi += (i as f64) * (i as f64 - 1.0) * term / x;
    }
    (phi, dphi)
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..180 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Returns `(x*, lambda)` where `x*` minimises `sv_{n,k}(x)/x`.
fn lambda_numeric_with_argmin(n: usize, k: usize) -> (f64, f64) {
    // Bracket chosen so the interior minimiser of sv(x)/x is always inside.
    let hi = 10.0 * n as f64;
    let mut x = golden_min(1e-6, hi, |x| sv_eval(n, k, x).unwrap() / x);
    // Newton polish on the stationarity equation.
    for _ in 0..8 {
        let (phi, dphi) = sv_ratio_stationarity(n, k, x);
        if dphi <= 0.0 {
            break;
        }
        let step = phi / dphi;
        let next = x - step;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        x = next;
        if step.abs() <= 1e-15 * x {
            break;
        }
    }
    (x, x / sv_eval(n, k, x).unwrap())
}

fn lambda_numeric(n: usize, k: usize) -> f64 {
    lambda_numeric_with_argmin(n, k).1
}

/// `λ(n,k) = (min_{x>0} sv_{n,k}(x)/x)^{-1}`, with closed forms used and
/// cross-checked where available: `λ(n,1) = 1`, `λ(k,k) = g(k)`,
/// `λ(n,2) = (1 + sqrt(2) sqrt((n-1)/n))^{-1}`.
pub fn lambda_factor(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("lambda needs 1 <= k <= n, got ({n}, {k})")));
    }
    if k == 1 {
        // sv_{n,1}(x)/x = 1 + 1/x has infimum 1 (not attained).
        return Ok(1.0);
    }
    let numeric = lambda_numeric(n, k);
    let closed = if k == n {
        Some(g_factor(n))
    } else if k == 2 {
        Some(1.0 / (1.0 + std::f64::consts::SQRT_2 * ((n as f64 - 1.0) / n as f64).sqrt()))
    } else {
        None
    };
    match closed {
        Some(c) => {
            if (c - numeric).abs() > 1e-9 {
                return Err(Error::IllConditioned(format!(
                    "lambda({n},{k}) closed form {c} disagrees with minimiser {numeric}"
                )));
            }
            Ok(c)
        }
        None => Ok(numeric),
    }
}

/// The `n -> infinity` limit `λ(∞,k) = (min_{t>0} (sum_{0<=i<=k} t^i/i!)/t)^{-1}`.
pub fn lambda_limit(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("lambda limit needs k >= 1".into()));
    }
    if k == 1 {
        return Ok(1.0);
    }
    let trunc_exp = |t: f64| {
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for i in 1..=k {
            term *= t / i as f64;
            sum += term;
        }
        sum
    };
    let mut t = golden_min(1e-6, 10.0 * (k + 1) as f64, |t| trunc_exp(t) / t);
    for _ in 0..8 {
        // phi(t) = t e'(t) - e(t) = sum (i-1) t^i / i!
        let mut term = 1.0f64;
        let mut phi = -1.0f64;
        let mut dphi = 0.0f64;
        for i in 1..=k {
            term *= t / i as f64;
            phi += (i as f64 - 1.0) * term;
            dphi += (i as f64) * (i as f64 - 1.0) * term / t;
        }
        if dphi <= 0.0 {
            break;
        }
        let next = t - phi / dphi;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        let moved = (next - t).abs();
        t = next;
        if moved <= 1e-15 * t {
            break;
        }
    }
    Ok(t / trunc_exp(t))
}

/// Checks the normalised log-concavity inequalities
/// `(a_i/C(n,i))^2 >= (a_{i-1}/C(n,i-1)) (a_{i+1}/C(n,i+1))`
/// for `1 <= i <= m-1`, with slack `1e-10 * scale`.
pub fn newton_check(coeffs: &[f64], n: usize) -> Result<bool> {
    let m = coeffs.len().saturating_sub(1);
    if coeffs.is_empty() || m > n {
        return Err(Error::InvalidParameter(format!(
            "newton check needs 1..=n+1 coefficients, got {} for n = {n}",
            coeffs.len()
        )));
    }
    for (i, &a) in coeffs.iter().enumerate() {
        if !(a >= 0.0) {
            return Err(Error::NegativeCoefficient {
                value: a,
                context: format!("newton check coefficient {i}"),
            });
        }
    }
    let b: Vec<f64> = coeffs.iter().enumerate().map(|(i, &a)| a / binomial_f64(n, i)).collect();
    let mut scale = 0.0f64;
    for i in 1..m {
        scale = scale.max(b[i] * b[i]).max(b[i - 1] * b[i + 1]);
    }
    let slack = 1e-10 * scale.max(f64::MIN_POSITIVE);
    Ok((1..m).all(|i| b[i] * b[i] >= b[i - 1] * b[i + 1] - slack))
}

/// `inf_{t>0} R(t)/t` for a nonnegative-coefficient univariate polynomial
/// `R(t) = sum a_i t^i`, via convex minimisation in `s = log t`.
pub fn univariate_capacity(coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() || coeffs.iter().all(|&a| a == 0.0) {
        return Err(Error::InvalidParameter("polynomial is identically zero".into()));
    }
    for (i, &a) in coeffs.iter().enumerate() {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::NegativeCoefficient {
                value: a,
                context: format!("univariate capacity coefficient {i}"),
            });
        }
    }
    // log(R(e^s)/e^s) = LSE_i( log a_i + (i-1) s ) is convex in s; the
    // bracket covers boundary infima (a_0 = 0 or degree <= 1) to below
    // double precision.
    let logs: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| (a.ln(), i as f64 - 1.0))
        .collect();
    let log_ratio = |s: f64| {
        let m = logs.iter().map(|&(la, w)| la + w * s).fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|&(la, w)| (la + w * s - m).exp()).sum::<f64>().ln()
    };
    let s = golden_min(-40.0, 40.0, log_ratio);
    Ok(log_ratio(s).exp())
}

/// The per-index factor table behind the capacity-to-mixed-volume bounds.
#[derive(Debug, Clone)]
pub struct BoundFactors {
    pub n: usize,
    /// `D(i) = min(i, aff(i))` with `i` 1-based in the given order.
    pub d: Vec<usize>,
    /// `λ(i, D(i))`; zero when `aff(i) = 0` (the mixed volume vanishes).
    pub lambda: Vec<f64>,
    pub product: f64,
    /// `n!/n^n`.
    pub vdw_factor: f64,
}

/// A Schrijver-type bound `(k!/k^k) λ(n,k)^(n-k) * cap` for profiles where
/// all but the `k` largest affine dimensions are `<= k`.
#[derive(Debug, Clone, Copy)]
pub struct SchrijverBound {
    pub k: usize,
    pub factor: f64,
    pub value: f64,
}

/// Lower bounds on the mixed volume derived from a capacity value.
#[derive(Debug, Clone)]
pub struct LowerBounds {
    pub factors: BoundFactors,
    /// `(n!/n^n) * cap`.
    pub vdw: f64,
    /// `prod λ(i, D(i)) * cap`; always `>= vdw`.
    pub svg: f64,
    pub schrijver: Option<SchrijverBound>,
}

/// `(k!/k^k) λ(n,k)^(n-k)`.
pub fn schrijver_factor(n: usize, k: usize) -> Result<f64> {
    Ok(factorial_f64(k) / (k as f64).powi(k as i32) * lambda_factor(n, k)?.powi((n - k) as i32))
}

/// Builds every closed-form lower bound on the mixed volume implied by
/// `capacity >= mixed volume` for the given affine-dimension profile.
pub fn lower_bounds_report(cap: f64, aff_dims: &[usize]) -> Result<LowerBounds> {
    let n = aff_dims.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty affine-dimension profile".into()));
    }
    if !(cap >= 0.0) || !cap.is_finite() {
        return Err(Error::InvalidParameter("capacity must be finite and >= 0".into()));
    }
    if aff_dims.iter().any(|&a| a > n) {
        return Err(Error::InvalidParameter("affine dimension exceeds ambient".into()));
    }
    let mut d = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    let mut product = 1.0f64;
    for (idx, &aff) in aff_dims.iter().enumerate() {
        let i = idx + 1;
        let di = i.min(aff);
        let li = if di == 0 { 0.0 } else { lambda_factor(i, di)? };
        product *= li;
        d.push(di);
        lambda.push(li);
    }
    let factors = BoundFactors { n, d, lambda, product, vdw_factor: vdw_factor(n) };

    // Schrijver-type bound: sort affine dimensions descending (mixed volume
    // is permutation invariant) and take the smallest k whose tail is <= k.
    let mut sorted = aff_dims.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let k =
        (1..=n).find(|&k| sorted[k..].iter().all(|&a| a <= k)).expect("k = n is always admissible");
    let schrijver = if sorted.last() == Some(&0) {
        None // degenerate profile: the mixed volume is zero outright
    } else {
        let factor = schrijver_factor(n, k)?;
        Some(SchrijverBound { k, factor, value: factor * cap })
    };

    Ok(LowerBounds {
        vdw: factors.vdw_factor * cap,
        svg: factors.product * cap,
        factors,
        schrijver,
    })
}

/// Per-body degrees and the Bernstein-type product bound for lattice
/// polytope tuples.
#[derive(Debug, Clone)]
pub struct NewtonDegrees {
    /// `d(i)` = maximum coordinate sum over the vertices of body `i`.
    pub degrees: Vec<u64>,
    pub product_bound: f64,
}

/// Requires every vertex candidate to have nonnegative integer coordinates
/// (tolerance 1e-9) and returns the coordinate-sum degrees with their
/// product, an upper bound for the mixed volume of the tuple.
pub fn newton_polytope_degrees(tuple: &BodyTuple) -> Result<NewtonDegrees> {
    newton_polytope_degrees_with(tuple, &Limits::default())
}

/// [`newton_polytope_degrees`] with explicit limits.
pub fn newton_polytope_degrees_with(tuple: &BodyTuple, limits: &Limits) -> Result<NewtonDegrees> {
    let mut degrees = Vec::with_capacity(tuple.n());
    for body in tuple.bodies() {
        let mut best = 0u64;
        for v in body.vertex_candidates(limits)? {
            let mut sum = 0u64;
            for &c in &v {
                if !(c >= -1e-9) || (c - c.round()).abs() > 1e-9 {
                    return Err(Error::InvalidBody(format!(
                        "vertex coordinate {c} is not a nonnegative integer"
                    )));
                }
                sum += c.round() as u64;
            }
            best = best.max(sum);
        }
        degrees.push(best);
    }
    let product_bound = degrees.iter().map(|&d| d as f64).product();
    Ok(NewtonDegrees { degrees, product_bound })
}
