use thiserror::Error;

/// Errors raised by tensor operations, solvers and file handling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("{operation} requires square frontal slices, got {rows}x{cols}")]
    NonSquare {
        operation: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("tensor is singular: face {face} has smallest singular value {sigma_min:e}")]
    Singular { face: usize, sigma_min: f64 },

    #[error("tensor is not normal: residual ||A*A^H - A^H*A||_F = {residual:e}")]
    NotNormal { residual: f64 },

    #[error("tensor is not Hermitian: residual ||A - A^H||_F = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("P^-1 * A * P is not F-diagonal: off-diagonal residual {residual:e} exceeds {tolerance:e}")]
    NotFDiagonalizable { residual: f64, tolerance: f64 },

    #[error("coefficient tensor has non-real entries (max |Im| = {max_imag:e})")]
    NonRealCoefficient { max_imag: f64 },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("{0}-norm is not supported here")]
    UnsupportedNorm(&'static str),

    #[error("invalid time samples: {0}")]
    InvalidTimes(String),

    #[error("expected {expected} solutions, got {actual}")]
    SolutionCount { expected: usize, actual: usize },

    #[error("face {face}: {source}")]
    Face {
        face: usize,
        #[source]
        source: Box<TensorError>,
    },

    #[error("{solver} did not converge after {iterations} iterations")]
    NoConvergence { solver: &'static str, iterations: usize },

    #[error("unknown example tensor {0:?} (expected A0, A1, A2 or A3)")]
    UnknownExample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed file at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TensorError {
    fn from(e: std::io::Error) -> Self {
        TensorError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TensorError>;
