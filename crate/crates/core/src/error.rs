use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A config references something that does not exist or is malformed.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two profiles or grids that must line up do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A scenario set breaks a hard probability bound.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Coupling estimation had an empty denominator.
    #[error("estimation error: {message} (days={days}, cpty_exceed={cpty_exceed}, sov_exceed={sov_exceed}, joint_exceed={joint_exceed})")]
    Estimation {
        message: String,
        days: usize,
        cpty_exceed: usize,
        sov_exceed: usize,
        joint_exceed: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable status used by batch front ends.
    pub fn status(&self) -> &'static str {
        match self {
            Error::Numerical(_) | Error::Estimation { .. } => "numerical_failure",
            Error::Io(_) => "io_error",
            _ => "validation_failed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
