use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    /// The regularized matrix `A + aI` lost rank during elimination. For a
    /// monotone operator this cannot happen, so it is evidence that the
    /// monotonicity hypothesis fails near the evaluation point.
    #[error("singular system: pivot {pivot:e} at column {column}")]
    Singular { pivot: f64, column: usize },

    /// `|(A + aI)^{-1} r| > |r| / a`; impossible when `A` is positive semidefinite.
    #[error("velocity bound violated: |vdot| = {vdot_norm:e} exceeds g/a = {bound:e}")]
    VelocityBound { vdot_norm: f64, bound: f64 },

    #[error("step size {step:e} fell below min_step at t = {t}")]
    StepUnderflow { step: f64, t: f64 },

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("trace format: {0}")]
    TraceFormat(String),
}
