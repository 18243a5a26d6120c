use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a mathematical precondition (ranges, shapes, class counts).
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller-supplied configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A document or file did not match its expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// Structural JSON failure, located by byte offset into the document.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("CPE component {index}: {message}")]
    Cpe { index: usize, message: String },

    /// One or more corpus rows failed validation.
    #[error("{} invalid row(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidRows(Vec<crate::dataset::RowViolation>),

    #[error("unseen value {value:?} for feature {feature}")]
    UnseenValue { feature: String, value: String },

    /// Stored artifact was produced for a different encoder.
    #[error("encoder fingerprint mismatch: model expects {expected}, sidecar is {actual}")]
    Fingerprint { expected: String, actual: String },

    /// Training or scoring failed on one cross-validation fold.
    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
