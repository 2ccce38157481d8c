//! Homogeneous polynomials with nonnegative coefficients in sparse
//! exponent-map form.
//!
//! These represent Minkowski volume polynomials and their derivative
//! truncations.  The capacity of such a polynomial `p` of degree equal to its
//! arity `n` is
//!
//! ```text
//! cap(p) = inf { p(x) / (x_1 ... x_n) : x > 0 },
//! ```
//!
//! computed here by projected gradient descent on the convex function
//! `y -> log p(exp(y))` restricted to the zero-sum hyperplane.

use crate::{Error, Result};
use std::collections::BTreeMap;

/// Iterates diverging beyond this radius (in the max norm of `y`) declare the
/// infimum unattained and the capacity zero.
pub const DIVERGENCE_RADIUS: f64 = 50.0;

/// Sparse homogeneous polynomial: exponent vector -> positive coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoefficients {
    arity: usize,
    degree: u32,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// Outcome of a polynomial capacity computation.
#[derive(Debug, Clone)]
pub struct PolyCapacity {
    /// The infimum value (zero when iterates diverge).
    pub capacity: f64,
    /// Minimizer on the product-one slice, `prod x_i = 1`.
    pub minimizer_x: Vec<f64>,
    /// False when the iteration budget ran out before the gradient test.
    pub converged: bool,
    /// True when divergence declared a zero capacity.
    pub zero_capacity: bool,
    pub iterations: u64,
}

impl PolyCoefficients {
    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    ///
    /// All exponent vectors must have length `arity` and a common total
    /// degree.  Coefficients must be `>= -1e-9` relative to the largest
    /// magnitude; small negatives are clamped to zero, true negatives are
    /// rejected.
    pub fn new(arity: usize, entries: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidParameter("polynomial arity must be positive".into()));
        }
        let scale = entries.iter().map(|(_, c)| c.abs()).fold(0.0f64, f64::max).max(1e-300);
        let mut degree: Option<u32> = None;
        let mut terms: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (alpha, c) in entries {
            if alpha.len() != arity {
                return Err(Error::DimensionMismatch { expected: arity, got: alpha.len() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
            if c < -1e-9 * scale {
                return Err(Error::NegativeCoefficient {
                    value: c,
                    context: format!("exponent {alpha:?}"),
                });
            }
            let c = c.max(0.0);
            if c == 0.0 {
                continue;
            }
            let d: u32 = alpha.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(d0) if d0 != d => {
                    return Err(Error::InvalidParameter(format!(
                        "mixed total degrees {d0} and {d}"
                    )))
                }
                _ => {}
            }
            *terms.entry(alpha).or_insert(0.0) += c;
        }
        let degree = degree.ok_or_else(|| {
            Error::InvalidParameter("polynomial has no positive coefficients".into())
        })?;
        Ok(PolyCoefficients { arity, degree, terms })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Term iterator in fixed (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    /// Coefficient of an exponent vector (zero when absent).
    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Evaluation at a point (componentwise nonnegative for the intended
    /// domain, but any finite point is accepted).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let mut s = 0.0;
        for (alpha, c) in &self.terms {
            let mut t = *c;
            for (&a, &xi) in alpha.iter().zip(x) {
                t *= xi.powi(a as i32);
            }
            s += t;
        }
        Ok(s)
    }

    /// `log p(exp(y))` by log-sum-exp; stable for `y` far from the origin.
    pub fn log_eval_exp(&self, y: &[f64]) -> Result<f64> {
        self.check_point(y)?;
        let mut m = f64::NEG_INFINITY;
        let logs: Vec<f64> = self
            .terms
            .iter()
            .map(|(alpha, c)| {
                let e: f64 = alpha.iter().zip(y).map(|(&a, &yi)| a as f64 * yi).sum();
                let v = c.ln() + e;
                m = m.max(v);
                v
            })
            .collect();
        Ok(m + logs.iter().map(|v| (v - m).exp()).sum::<f64>().ln())
    }

    /// Scale-free gradient `gamma_i = x_i (d_i p) / p` at `x = exp(y)`.
    /// For a homogeneous polynomial the entries sum to the degree.
    pub fn gamma(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        let mut m = f64::NEG_INFINITY;
        let logs: Vec<f64> = self
            .terms
            .iter()
            .map(|(alpha, c)| {
                let e: f64 = alpha.iter().zip(y).map(|(&a, &yi)| a as f64 * yi).sum();
                let v = c.ln() + e;
                m = m.max(v);
                v
            })
            .collect();
        let mut total = 0.0;
        let mut g = vec![0.0; self.arity];
        for ((alpha, _), lv) in self.terms.iter().zip(&logs) {
            let w = (lv - m).exp();
            total += w;
            for (gi, &a) in g.iter_mut().zip(alpha) {
                *gi += w * a as f64;
            }
        }
        for gi in &mut g {
            *gi /= total;
        }
        Ok(g)
    }

    /// Keeps the variables `1..=keep` of a polynomial with `arity == degree`:
    /// differentiates once in each dropped variable, then sets them to zero.
    /// In coefficient terms this keeps exactly the exponents with `alpha_j = 1`
    /// for all dropped `j`.
    pub fn derivative_truncation(&self, keep: usize) -> Result<PolyCoefficients> {
        if self.degree as usize != self.arity {
            return Err(Error::InvalidParameter(format!(
                "truncation chain needs degree == arity, got {} and {}",
                self.degree, self.arity
            )));
        }
        if keep == 0 || keep > self.arity {
            return Err(Error::InvalidParameter(format!(
                "keep index {keep} outside 1..={}",
                self.arity
            )));
        }
        let entries: Vec<(Vec<u32>, f64)> = self
            .terms
            .iter()
            .filter(|(alpha, _)| alpha[keep..].iter().all(|&a| a == 1))
            .map(|(alpha, &c)| (alpha[..keep].to_vec(), c))
            .collect();
        if entries.is_empty() {
            return Err(Error::InvalidParameter(
                "truncation has no surviving terms (zero polynomial)".into(),
            ));
        }
        PolyCoefficients::new(keep, entries)
    }

    /// Capacity by projected gradient descent; see the module docs.
    /// `tol` controls the gradient-norm stopping test.
    pub fn capacity(&self, tol: f64) -> Result<PolyCapacity> {
        if self.degree as usize != self.arity {
            return Err(Error::InvalidParameter(format!(
                "capacity needs degree == arity, got {} and {}",
                self.degree, self.arity
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        let n = self.arity;
        if n == 1 {
            let cap = self.eval(&[1.0])?;
            return Ok(PolyCapacity {
                capacity: cap,
                minimizer_x: vec![1.0],
                converged: true,
                zero_capacity: false,
                iterations: 0,
            });
        }
        let grad_tol = tol / (4.0 * DIVERGENCE_RADIUS * (n as f64).sqrt());
        let max_iter = 50_000u64;
        // With a positive coefficient on x_1...x_n the capacity is bounded
        // below by it, so escaping iterates still approach a positive infimum
        // and the gradient test fires; only a zero multilinear coefficient
        // lets the infimum collapse to zero along a diverging ray.
        let multilinear = self.coefficient(&vec![1u32; n]);
        let mut y = vec![0.0; n];
        let mut val = self.log_eval_exp(&y)?;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            iterations += 1;
            let gamma = self.gamma(&y)?;
            let mean = gamma.iter().sum::<f64>() / n as f64;
            let g: Vec<f64> = gamma.iter().map(|c| c - mean).collect();
            let gnorm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
            if gnorm <= grad_tol {
                converged = true;
                break;
            }
            // Backtracking line search on the convex objective.
            let mut step = 1.0;
            loop {
                let cand: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
                let cval = self.log_eval_exp(&cand)?;
                if cval <= val - 0.25 * step * gnorm * gnorm {
                    y = cand;
                    val = cval;
                    break;
                }
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
            if multilinear == 0.0 && y.iter().any(|c| c.abs() > DIVERGENCE_RADIUS) {
                return Ok(PolyCapacity {
                    capacity: 0.0,
                    minimizer_x: y.iter().map(|c| c.exp()).collect(),
                    converged: true,
                    zero_capacity: true,
                    iterations,
                });
            }
        }
        Ok(PolyCapacity {
            capacity: val.exp(),
            minimizer_x: y.iter().map(|c| c.exp()).collect(),
            converged,
            zero_capacity: false,
            iterations,
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: x.len() });
        }
        Ok(())
    }
}
