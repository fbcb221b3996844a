use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad grid size, parameter out of range, mismatched dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input that is well-formed but outside the operator's domain
    /// (nonzero mean for Biot-Savart, point too close to an axis, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point or radius outside the admissible region.
    #[error("domain error: {0}")]
    Domain(String),

    /// NaN/inf during time stepping, nonconvergent sums, failed fits.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed snapshot or table file.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
