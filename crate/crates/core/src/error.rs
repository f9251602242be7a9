//! Crate-wide error type.

use thiserror::Error;

/// Unified error for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/vector shapes do not compose.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An API contract was violated (e.g. non-scalar loss in backward).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Text-format parse failure; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Bad run configuration (unknown key, wrong type, missing file).
    #[error("config error: {0}")]
    Config(String),

    /// A localization query carries no usable signal.
    #[error("no information: {0}")]
    NoInformation(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
