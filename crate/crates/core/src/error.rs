use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: header is missing column `{column}`")]
    HeaderMismatch { path: PathBuf, column: String },

    #[error("{path}, line {line}: column `{column}` has non-numeric value `{value}`")]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },

    #[error("line {line}: label `{value}` is not 0 or 1")]
    InvalidLabel { line: u64, value: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("column `{0}` has no observed values")]
    EntirelyMissing(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset is not standardized")]
    NotStandardized,

    #[error("dataset is unlabeled or partially labeled")]
    Unlabeled,

    #[error("data contains a single class")]
    SingleClass,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("unknown record id `{0}`")]
    UnknownId(String),

    #[error("zero-norm vector has no direction")]
    ZeroNorm,

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("covariance of component {component} is singular even after regularization")]
    SingularCovariance { component: usize },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
