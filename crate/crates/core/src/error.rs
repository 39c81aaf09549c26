use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("column `{0}` is mapped but missing from the header")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    InvalidRecord { row: usize, message: String },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("dataset is empty after {0}")]
    EmptyDataset(String),

    #[error("feature `{feature}`: value {value} is not a declared category")]
    UnknownCategory { feature: String, value: f64 },

    #[error("column {0} has no observed value in the fit split and cannot be imputed")]
    UnimputableColumn(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("{0} models are not supported here")]
    UnsupportedFamily(String),

    #[error("exhaustive Shapley enumeration limited to {max} features, got {got}")]
    TooManyFeatures { got: usize, max: usize },

    #[error("requested top {k} features but only {available} remain after exclusions")]
    KTooLarge { k: usize, available: usize },

    #[error("invalid fold plan: {0}")]
    InvalidFolds(String),

    #[error("invalid metric input: {0}")]
    InvalidMetricInput(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error originates from input data rather than from
    /// model fitting.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::InvalidMeasurement(_)
            | Error::InvalidScore(_)
            | Error::Io { .. }
            | Error::Format { .. }
            | Error::MissingColumn(_)
            | Error::InvalidRecord { .. }
            | Error::NonNumeric { .. }
            | Error::InvalidSchema(_)
            | Error::EmptyDataset(_)
            | Error::UnknownCategory { .. }
            | Error::UnimputableColumn(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Fold { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
