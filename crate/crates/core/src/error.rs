use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function (non-finite
    /// parameters, negative distances, non-positive Bessel arguments).
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two points coincide where distinct points are required.
    #[error("singular configuration: points {0} and {1} coincide")]
    SingularConfiguration(usize, usize),

    /// Cholesky breakdown. Carries the index of the failing pivot.
    #[error("Gram matrix is not numerically positive definite: pivot {pivot} = {value:e}")]
    Conditioning { pivot: usize, value: f64 },

    /// The solved system does not reproduce the data at the nodes.
    #[error("node residual {residual:e} exceeds tolerance {tolerance:e}")]
    NodeResidual { residual: f64, tolerance: f64 },

    /// Invalid or unresolvable configuration. Each entry is one problem.
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// Relative error requested for a target that vanishes on the grid.
    #[error("cannot normalize by an identically zero target")]
    ZeroNormalization,

    #[error("need at least {need} rows, have {have}")]
    InsufficientRows { need: usize, have: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
