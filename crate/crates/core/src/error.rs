//! Error type shared by the library.

use thiserror::Error;

/// Failure modes of the analytical and numerical machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation
    /// (non-finite input, non-positive s, |beta| >= 1, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to reach its tolerance (quadrature panel
    /// refinement exhausted, root bracketing failed, integrator blow-up).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed input data (tabulated envelope files, inconsistent grids).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Underlying I/O failure while reading user-supplied tables.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
