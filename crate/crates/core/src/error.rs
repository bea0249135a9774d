use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("infeasible set: {0}")]
    InfeasibleSet(String),

    #[error("unbounded set: {0}")]
    UnboundedSet(&'static str),

    #[error("projection did not converge after {cycles} cycles (last change {change:e})")]
    ProjectionNotConverged { cycles: usize, change: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stepsize requested out of order: expected k = {expected}, got k = {requested}")]
    OutOfOrder { expected: usize, requested: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("iteration cap of {cap} reached with residual {residual:e}")]
    IterationCap { cap: usize, residual: f64 },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
