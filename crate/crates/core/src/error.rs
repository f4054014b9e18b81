use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested Hilbert space exceeds what dense routines will allocate.
    #[error("size guardrail: {what} ({size} > {limit})")]
    SizeGuardrail {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("transfer-matrix composition is ill-conditioned at k = {k} (condition number {condition:.3e})")]
    NumericalInstability { k: f64, condition: f64 },

    #[error("resonance conditions are inconsistent: spacing {index} requires k = {required}, expected {expected}")]
    InconsistentResonance {
        index: usize,
        required: f64,
        expected: f64,
    },

    /// Post-selection on transmission has (numerically) zero probability.
    #[error("extinct branch at launch {launch}: transmission probability {probability:.3e}")]
    ExtinctBranch { launch: usize, probability: f64 },

    #[error("uniqueness violation: expected a one-dimensional sector, found dimension {dimension}")]
    UniquenessViolation { dimension: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
