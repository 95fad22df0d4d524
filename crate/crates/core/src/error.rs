use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("structural violation: {0}")]
    Structure(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("solver backend failure: {0}")]
    Backend(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
