use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by loading, configuring and running the detector.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: unsupported PLY property `{property}`: {reason}")]
    UnsupportedProperty {
        path: PathBuf,
        property: String,
        reason: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{stage}: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data or configuration rather than
    /// by a failing pipeline stage.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Stage { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
