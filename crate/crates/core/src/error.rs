use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Grid or basis too coarse or too small for the requested object.
    #[error("resolution error: {message}")]
    Resolution {
        message: String,
        /// Suggested size (nodes, basis levels) that would satisfy the request.
        required: Option<usize>,
    },

    /// Operands live on different grids or bases.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Numerical breakdown (ill-conditioned matrix, unstable step, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Operation not defined for this pair of symbol representations.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Coefficient expansion cut off before the requested tolerance.
    #[error("truncation error: {message} (suggested size {suggested})")]
    Truncation { message: String, suggested: usize },

    /// Time step too large for the explicit reference integrator.
    #[error("step size error: {0}")]
    StepSize(String),

    /// Time series sampled too coarsely for the frequencies it carries.
    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resolution(msg: impl Into<String>, required: Option<usize>) -> Self {
        Error::Resolution {
            message: msg.into(),
            required,
        }
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
