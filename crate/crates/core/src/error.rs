use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A value outside the domain on which the laws are defined.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("parameter count must be a finite value >= 1, got {0}")]
    ParamCount(f64),
    #[error("token count must be a finite value >= 1, got {0}")]
    TokenCount(f64),
    #[error("sparsity out of [0,1): {0}")]
    Sparsity(f64),
    #[error("compute budget must be finite and > 0, got {0}")]
    Budget(f64),
    #[error("active count {active} must satisfy 1 <= active <= total ({total})")]
    ActiveCount { total: f64, active: f64 },
    #[error("count {0} exceeds 2^53 and cannot be represented exactly")]
    CountTooLarge(f64),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    /// Input rejected while parsing; rows are 1-based and count the header.
    #[error("row {row}, column '{column}': {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("invalid coefficients: {0}")]
    Coefficients(String),
    #[error("invalid search space: {0}")]
    SearchSpace(String),
    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: DomainError,
    },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { row, column: column.into(), message: message.into() }
    }
}
