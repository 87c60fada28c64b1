use thiserror::Error;

use crate::krylov::SolveReport;

/// Failures while reading, writing or validating a sparse SPD matrix.
#[derive(Debug, Error)]
pub enum SparseError {
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("diagonal entry {index} is missing")]
    MissingDiagonal { index: usize },
    #[error("diagonal entry {index} is not positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("index {index} out of bounds for dimension {dim}")]
    IndexOutOfBounds { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Failures of the dense kernels.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DenseError {
    #[error("matrix is not positive definite: pivot {pivot} is {value}")]
    Indefinite { pivot: usize, value: f64 },
    #[error("triangular factor has a zero or non-finite diagonal at {index}")]
    SingularDiagonal { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Failures of the ordering stage.
#[derive(Debug, Error)]
pub enum OrderingError {
    #[error("coordinates are required but were not supplied")]
    MissingCoordinates,
    #[error("coordinate count {found} does not match matrix dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed coordinate file at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Failures of the numerical factorization.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FactorError {
    #[error("Schur complement of supernode {supernode} (block {block}) is indefinite at pivot {pivot}")]
    Indefinite {
        supernode: usize,
        block: usize,
        pivot: usize,
    },
    #[error("factorization still indefinite after {attempts} attempts (alpha_D trace {alpha_trace:?})")]
    TooManyRestarts { attempts: usize, alpha_trace: Vec<f64> },
    #[error("matrix is not positive definite (supernode {supernode}, pivot {pivot})")]
    NotPositiveDefinite { supernode: usize, pivot: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("coordinate count {found} does not match matrix dimension {expected}")]
    CoordinateMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// Failures of the Krylov solver.
#[derive(Debug, Error)]
pub enum KrylovError {
    #[error("no convergence after {} iterations (relative residual {:.3e})", .report.iterations, .report.final_relative_residual)]
    MaxIterations { x: Vec<f64>, report: SolveReport },
    #[error("breakdown at iteration {iteration}: curvature {curvature} is not positive")]
    BreakdownNonSpd { iteration: usize, curvature: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
