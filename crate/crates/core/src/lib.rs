//! Mixed volumes of convex bodies via exact oracles and a convex capacity
//! relaxation.
//!
//! The crate is organised around the Minkowski volume polynomial of a tuple
//! `(K_1, ..., K_n)` of convex bodies in `R^n`,
//!
//! ```text
//! V_K(x_1, ..., x_n) = vol_n(x_1 K_1 + ... + x_n K_n),   x_i >= 0,
//! ```
//!
//! a homogeneous degree-`n` polynomial with nonnegative coefficients.  The
//! mixed volume is its mixed derivative `d^n V_K / dx_1 ... dx_n` (the
//! coefficient of `x_1 x_2 ... x_n`), which is `n!` times the classical
//! symmetric-form normalisation.  Everything in this crate uses the derivative
//! normalisation unless a function says otherwise.
//!
//! Modules:
//! - [`geometry`]: body representations (boxes, zonotopes, V-polytopes),
//!   exact and Monte Carlo volumes, Minkowski combinations, support values.
//! - [`mv_exact`]: exact mixed-volume oracles (inclusion-exclusion
//!   polarization, permanents of box tuples, determinants of segment tuples,
//!   coefficient extraction for small arity).
//! - [`polynomial`]: sparse coefficient form of the volume polynomial,
//!   truncated derivative chains and capacities of explicit polynomials.
//! - [`capacity`]: the objective `y -> log V_K(e^y)` on the zero-sum
//!   hyperplane, exact and sampled oracles with error estimates.
//! - [`solver`]: decomposition into indecomposable blocks, a priori search
//!   radius, ellipsoid and projected-gradient minimisation, certified
//!   mixed-volume brackets.
//! - [`bounds`]: the bound-factor family `lambda(n, k)`, Van der Waerden and
//!   degree-profile lower bounds, Newton-sequence checks.
//! - [`scaling`]: Sinkhorn-style scaling of volume polynomials and
//!   near-optimality diagnostics.
//! - [`discriminant`]: mixed discriminants of PSD matrix tuples and the
//!   ellipsoid-tuple volume bracket.
//! - [`io`]: JSON input/output formats shared with the command line tool.

// `!(x >= 0.0)` is the NaN-rejecting form of a sign guard and is used
// deliberately throughout the numeric code; index loops over several
// parallel arrays stay as plain `for i in 0..n` where iterator chains would
// obscure the arithmetic.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod capacity;
pub mod discriminant;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mv_exact;
pub mod polynomial;
pub mod rational;
pub mod rng;
pub mod scaling;
pub mod selftest;
pub mod solver;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
