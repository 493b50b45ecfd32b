use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure in {context}: achieved residual {residual:e}")]
    NumericalFailure { context: String, residual: f64 },

    #[error("time {t} outside schedule domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("capability limit: {0}")]
    Capability(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("fit window not found: {0}")]
    WindowNotFound(String),

    #[error("fit domain error: {0}")]
    FitDomain(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(context: impl Into<String>, residual: f64) -> Self {
        Error::NumericalFailure {
            context: context.into(),
            residual,
        }
    }

    /// True for failures of an iterative method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
