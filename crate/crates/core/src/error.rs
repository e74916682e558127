//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector's length does not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A run configuration is unusable (missing path, bad field, empty label set, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    /// The oracle could not be reached (timeout, broken pipe, connection refused,
    /// non-200 status). Retryable.
    #[error("oracle transport failure: {0}")]
    Transport(String),

    /// The oracle answered, but the payload does not conform to the wire protocol.
    /// Not retryable; the raw payload is preserved for debugging.
    #[error("oracle protocol error: {reason} (payload: {payload:?})")]
    Protocol { reason: String, payload: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// An input file for `report` does not match any known artifact schema.
    #[error("schema mismatch in {path}: {detail}")]
    Schema { path: PathBuf, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures worth re-sending to an external oracle.
    pub fn is_transport(&self) -> bool {
        matches!(self, Error::Transport(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
