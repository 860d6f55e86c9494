use thiserror::Error;

/// Errors produced by the estimation, detection and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance sequence is not Hermitian-symmetric (imaginary residual {residual:e})")]
    SymmetryViolation { residual: f64 },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("observation block is empty")]
    EmptyObservation,

    #[error("GLRT statistic undefined for a zero observation block")]
    DegenerateObservation,

    #[error("pure-noise block required for estimator mode {0}")]
    MissingNoiseBlock(&'static str),

    #[error("{trials} trials cannot resolve a {rate} quantile (need trials*rate >= 20)")]
    InsufficientTrials { trials: usize, rate: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("internal numerical error: {0}")]
    Numerical(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
