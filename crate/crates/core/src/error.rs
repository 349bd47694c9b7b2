use thiserror::Error;

/// Invariant violations detected by [`crate::data::validate`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetViolation {
    #[error("dataset has no observations")]
    Empty,
    #[error("non-binary dependent value at row {row}")]
    NonBinary { row: usize },
    #[error("non-finite covariate at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
}

#[derive(Debug, Error)]
pub enum GofError {
    #[error("invalid dataset: {0}")]
    Dataset(#[from] DatasetViolation),
    #[error("invalid model specification: {0}")]
    ModelSpec(String),
    #[error("invalid grouping: {0}")]
    Grouping(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid ordering: {0}")]
    Ordering(String),
    #[error("invalid fit configuration: {0}")]
    FitConfig(String),
    #[error("invalid simulation plan: {0}")]
    Plan(String),
    #[error("exhaustive enumeration needs n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("csv error at row {row}, column {column:?}: {message}")]
    Csv {
        row: usize,
        column: Option<String>,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown statistic {0:?}")]
    UnknownStatistic(String),
    #[error("unknown report format {0:?}")]
    UnknownFormat(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("simulation cancelled")]
    Cancelled,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GofError {
    /// Process exit code: 1 usage/config, 2 data validation, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            GofError::Dataset(_) | GofError::Csv { .. } | GofError::LengthMismatch { .. } => 2,
            GofError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = GofError> = std::result::Result<T, E>;
