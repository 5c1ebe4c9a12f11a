use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("family {family} is not supported for {operation}")]
    UnsupportedFamily { family: String, operation: String },
    #[error("quadrature did not converge: achieved tolerance {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CoalError>;

impl CoalError {
    pub fn argument(msg: impl Into<String>) -> Self {
        CoalError::Argument(msg.into())
    }

    pub fn unsupported(family: impl Into<String>, operation: impl Into<String>) -> Self {
        CoalError::UnsupportedFamily {
            family: family.into(),
            operation: operation.into(),
        }
    }
}
