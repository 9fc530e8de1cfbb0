use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    /// Matrix, frame or vector dimensions are inconsistent.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// The requested method does not support the given parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative method hit its iteration cap or produced garbage.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A direct (non-logarithmic) value was requested but would overflow.
    #[error("overflow: {0}; use the log-scale variant")]
    Overflow(String),

    #[error("invalid profile document: {0}")]
    Profile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        func,
        msg: msg.into(),
    }
}
