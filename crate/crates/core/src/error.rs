//! Error type shared across the crate.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    InvalidArgument(String),
    /// An oracle or iterate produced NaN/Inf. `context` names the site,
    /// e.g. "inner ascent block 3 step 7".
    NonFinite { context: String },
    /// Vector dimensions disagree.
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },
    /// A stationarity measure came out more negative than numerical noise
    /// allows; indicates a wrong prox or a wrong Lipschitz constant.
    NegativeMeasure { value: f64 },
    /// An iterative sub-solver hit its cap before reaching tolerance.
    NoConvergence { context: String, residual: f64 },
    /// Trace or config file failed schema validation.
    Format { location: String, message: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonFinite { context } => write!(f, "non-finite value at {context}"),
            Error::DimensionMismatch { context, expected, actual } => {
                write!(f, "dimension mismatch in {context}: expected {expected}, got {actual}")
            }
            Error::NegativeMeasure { value } => {
                write!(f, "stationarity measure is negative beyond tolerance: {value}")
            }
            Error::NoConvergence { context, residual } => {
                write!(f, "{context} did not converge (residual {residual:e})")
            }
            Error::Format { location, message } => write!(f, "{location}: {message}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
