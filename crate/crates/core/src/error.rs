use thiserror::Error;

/// Errors produced anywhere in the benchmark pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("dimension {dim} too large for exhaustive enumeration (max {max})")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("training failed at epoch {epoch}: {reason}")]
    TrainingFailure { epoch: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
