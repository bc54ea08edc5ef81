use thiserror::Error;

/// Errors raised by the statistics, bootstrap, and data generation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A split index or location lies outside its admissible range.
    #[error("index {index} outside admissible range [{lo}, {hi}]")]
    OutOfRange { index: usize, lo: usize, hi: usize },

    /// Configuration values are inconsistent with each other or with the data.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The observation matrix violates a structural requirement.
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Two inputs that must agree in length do not.
    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A matrix factorization or iterative method failed.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn sample(msg: impl Into<String>) -> Self {
        Error::InvalidSample(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
