use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A FER2013 CSV row failed validation. `row` is 1-based and counts data rows only.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("{path}: {message}")]
    InvalidImage { path: PathBuf, message: String },

    #[error("unknown emotion '{name}' (accepted: {accepted})")]
    UnknownEmotion { name: String, accepted: String },

    #[error("item {index} has no usage tag")]
    MissingUsage { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
