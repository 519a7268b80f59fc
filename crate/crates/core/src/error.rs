//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised by the numerical routines and file formats.
#[derive(Debug, Error)]
pub enum CoreError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A degree/order pair violates |k| <= n or a related index bound.
    #[error("index error: {0}")]
    Index(String),
    /// Invalid configuration (grid sizes, step sizes, flags).
    #[error("configuration error: {0}")]
    Config(String),
    /// Mismatched vector lengths or grid bindings.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A computation produced non-finite values or failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Malformed input file.
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }
    pub fn index(msg: impl Into<String>) -> Self {
        CoreError::Index(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }
    pub fn shape(msg: impl Into<String>) -> Self {
        CoreError::Shape(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        CoreError::Numeric(msg.into())
    }
    pub fn format(msg: impl Into<String>) -> Self {
        CoreError::Format(msg.into())
    }
}
