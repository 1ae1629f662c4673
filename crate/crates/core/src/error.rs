use thiserror::Error;

/// Errors raised by the pricing, hedging and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched vector or matrix dimensions.
    #[error("shape error: {0}")]
    Shape(String),

    /// The requested computation exceeds a hard size limit.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// An integrand or intermediate value was NaN or infinite.
    #[error("non-finite value {value} at quadrature node {node}")]
    NonFinite { node: usize, value: f64 },

    /// A feature exists in the model but is not supported by this routine.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A root-finder could not bracket a solution.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Input correlation data contradicts a structural guarantee.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// Malformed input file or configuration.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
