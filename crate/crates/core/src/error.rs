use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// The run configuration is inconsistent (bad box, κ < h, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input value is outside the domain of the operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// A numerical procedure failed (no bracket, iteration cap, ...).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Malformed atom file line.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed mask file: {0}")]
    Mask(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that should map to the "configuration" exit status.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Input(_) | Error::Parse { .. } | Error::Mask(_) | Error::Toml(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
