use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite potential ({0})")]
    NonFinitePotential(f64),

    #[error("divergent trajectory at leapfrog step {step}")]
    DivergentTrajectory { step: usize },

    #[error("theta range overflow: spread {spread} exceeds bound width {width}")]
    ThetaRangeOverflow { spread: f64, width: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid mass matrix: {0}")]
    InvalidMass(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
