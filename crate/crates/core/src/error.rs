//! Crate-wide error type with coarse categories for CLI exit reporting.

use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by any pipeline stage. Each variant maps to a stable
/// category string so the CLI can emit one machine-parseable error line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file did not match its declared format. `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Invalid configuration value or config-file syntax.
    #[error("{0}")]
    Config(String),

    /// Input data violates a contract (empty corpus, duplicate ids, ...).
    #[error("{0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Training produced a non-finite loss.
    #[error("{0}")]
    Numeric(String),
}

impl Error {
    /// Stable category tag used in CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Dimension(_) => "dimension",
            Error::Numeric(_) => "numeric",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        Error::Data(message.into())
    }

    pub fn dimension(message: impl Into<String>) -> Self {
        Error::Dimension(message.into())
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
