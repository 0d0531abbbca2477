use thiserror::Error;

/// Errors raised by basis construction, dynamics, and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation too large: basis dimension {dim} exceeds limit {limit}")]
    TruncationTooLarge { dim: usize, limit: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("state {0} is not contained in the basis")]
    MissingState(String),

    #[error("parameters are not resonant and identical: {0}")]
    NotResonant(String),

    #[error("norm drift {drift:e} exceeds tolerance {tolerance:e}")]
    NormDrift { drift: f64, tolerance: f64 },

    #[error("non-finite values in result: {0}")]
    NonFinite(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("non-physical density matrix: {0}")]
    NonPhysical(String),

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// True for failures that indicate a numerical defect rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. }
                | Error::NonFinite(_)
                | Error::NotHermitian(_)
                | Error::NonPhysical(_)
                | Error::Decomposition(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
