//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A file did not match its declared on-disk format.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A value violated a domain invariant.
    #[error("invalid value: {0}")]
    Value(String),

    /// Tensor or matrix dimensions did not match a contract.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A corpus manifest was inconsistent.
    #[error("manifest error: {0}")]
    Manifest(String),

    /// A metric could not be computed from the given signals.
    #[error("metric error: {0}")]
    Metric(String),

    /// An external tool produced unparseable output.
    #[error("adapter error: {0}")]
    Adapter(String),

    /// Model inputs missing or inconsistent with the variant.
    #[error("input error: {0}")]
    Input(String),

    /// Training loss became non-finite.
    #[error("training diverged at step {step}")]
    Divergence { step: usize },

    /// An experiment configuration was incomplete.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
