use alloc::string::String;

/// Errors raised by the arithmetic and policy layers.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ring mismatch: modulus {left:?} vs {right:?}")]
    RingMismatch { left: Option<u64>, right: Option<u64> },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    /// Operands are too wide for the exact 128-bit evaluation pipeline, or
    /// an integer-mode product coefficient does not fit in 64 bits.
    #[error("coefficient overflow: {0}")]
    CoefficientOverflow(String),

    /// A division during interpolation left a remainder. For genuine
    /// pointwise products this never happens.
    #[error("inexact interpolation: {value} is not divisible by {divisor}")]
    InexactInterpolation { value: i128, divisor: i128 },

    /// A worker pool could not be created.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("calibration input incomplete: {0}")]
    CalibrationInput(String),

    #[error("no calibration data for {0}")]
    Coverage(String),

    #[error("invalid rule table at {path}: {reason}")]
    RuleTable { path: String, reason: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
