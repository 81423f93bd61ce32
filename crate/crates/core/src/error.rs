use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Failures of theorem hypotheses are normally carried as verdicts inside
/// reports; `AssumptionFailed` is only used where an operation cannot
/// proceed without the hypothesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("argument {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("malformed function: {0}")]
    MalformedFunction(String),

    #[error("malformed domain: {0}")]
    MalformedDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function must be continuous: {0}")]
    Discontinuous(String),

    #[error("grid mismatch: expected {expected} intervals, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("invalid tagged partition: {0}")]
    InvalidPartition(String),

    #[error("kernel rejected: {0}")]
    KernelRejected(String),

    #[error("{label} violated: {detail}")]
    AssumptionFailed { label: &'static str, detail: String },

    #[error("series not certified: {0}")]
    NotCertified(String),

    #[error("degenerate image: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn assumption(label: &'static str, detail: impl Into<String>) -> Self {
        Error::AssumptionFailed {
            label,
            detail: detail.into(),
        }
    }

    /// The assumption label attached to this error, if any.
    pub fn assumption_label(&self) -> Option<&'static str> {
        match self {
            Error::AssumptionFailed { label, .. } => Some(label),
            _ => None,
        }
    }
}
