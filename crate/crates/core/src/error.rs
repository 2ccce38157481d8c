//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by geometry, oracle and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or body has the wrong ambient dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Ambient dimension exceeds the supported cap.
    #[error("ambient dimension {dim} exceeds supported cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// Tuple arity exceeds the cap of an enumeration-based operation.
    #[error("tuple arity {n} exceeds cap {cap} for {op}")]
    ArityCap { n: usize, cap: usize, op: &'static str },

    /// A body fails its representation invariants.
    #[error("invalid body: {0}")]
    InvalidBody(String),

    /// Expanding a representation would exceed the configured vertex budget.
    #[error("representation blowup: {candidates} candidate vertices exceed budget {budget}")]
    RepresentationBlowup { candidates: usize, budget: usize },

    /// A combination of bodies is lower-dimensional where full dimension is
    /// required.
    #[error("degenerate tuple: {0}")]
    DegenerateTuple(String),

    /// The tuple fails the indecomposability precondition of a solver
    /// operation; the subset is a witness with `aff(sum) <= |subset|`.
    #[error("tuple is not indecomposable (witness subset {witness:?})")]
    NotIndecomposable { witness: Vec<usize> },

    /// Interpolation or linear solve hit an ill-conditioned system.
    #[error("ill-conditioned computation: {0}")]
    IllConditioned(String),

    /// A negative coefficient beyond tolerance appeared where nonnegativity
    /// is guaranteed.
    #[error("negative coefficient {value} at {context}")]
    NegativeCoefficient { value: f64, context: String },

    /// A scaling step hit a vanishing or negative partial derivative.
    #[error("scaling step undefined: partial derivative {value} in coordinate {index}")]
    VanishingDerivative { index: usize, value: f64 },

    /// A scaling step increased the objective beyond tolerance on a class
    /// that guarantees monotone decrease.
    #[error("scaling class violation at step {step}: objective increased by {delta}")]
    ClassViolation { step: usize, delta: f64 },

    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input file violates the documented schema.
    #[error("input parse error: {0}")]
    ParseInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
