//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("architecture parse error: {0}")]
    ArchParse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite activation in {layer}")]
    NonFinite { layer: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("estimator {method} failed: {reason}")]
    Estimator { method: String, reason: String },

    #[error("unknown measure: {0}")]
    UnknownMeasure(String),

    #[error("unknown rule set: {0}")]
    UnknownRuleSet(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("math domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn estimator(method: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Estimator {
            method: method.into(),
            reason: reason.into(),
        }
    }
}
