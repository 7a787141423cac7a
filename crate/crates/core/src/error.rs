use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("non-finite integrand value {value} at node {index} ({point:?})")]
    NonFiniteIntegrand {
        index: usize,
        point: Vec<f64>,
        value: f64,
    },
    #[error("unsupported dimension {d} (maximum {max})")]
    UnsupportedDimension { d: usize, max: usize },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),
    #[error("precondition failed: {0}")]
    PreconditionFailure(String),
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),
    #[error("experiment failed: {0}")]
    ExperimentFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }
}
