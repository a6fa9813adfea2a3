//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its domain (Hurst outside (0,1), negative
    /// variance, bad cluster count, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Inputs whose shapes must agree do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix expected to be symmetric positive definite failed to
    /// factorize.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A numerical procedure failed (overflow, rank deficiency,
    /// non-convergence that cannot be expressed as a partial result).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid mesh topology or geometry.
    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
