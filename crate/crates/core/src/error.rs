use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A spec or document field failed validation.
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    /// A structured document violated the schema; `path` points at the entry.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    /// A mathematical precondition was violated (empty input, bad weights, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The topology or router configuration cannot serve requests.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluator returned non-finite objectives for genome {genome}")]
    NonFiniteObjective { genome: String },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("request {request_id} could not be routed: {message}")]
    Unroutable { request_id: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
