use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis dimension {requested} exceeds capacity {cap}")]
    Capacity { requested: u128, cap: usize },

    #[error("mode index {index} out of range for {count} modes")]
    InvalidMode { index: usize, count: usize },

    #[error("dopant index {index} out of range for {count} dopants")]
    InvalidDopant { index: usize, count: usize },

    #[error("level {level} is not present on dopant {dopant}")]
    UnknownLevel { dopant: usize, level: char },

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported basis shape: {0}")]
    InvalidBasisShape(String),

    #[error("unknown schedule parameter `{0}`")]
    UnknownParameter(String),

    #[error("initial state {0} is outside the closed-form evolution set")]
    UnsupportedInitialState(String),

    #[error("Krylov expansion did not converge after {iterations} iterations")]
    KrylovNonConvergence { iterations: usize },

    #[error("photon number mismatch: {0}")]
    PhotonNumber(String),

    #[error("expectation value has imaginary part {0:e} for a Hermitian operator")]
    NonRealExpectation(f64),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
