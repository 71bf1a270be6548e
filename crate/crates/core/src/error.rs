use thiserror::Error;

/// Errors produced while building or solving a cut finite element problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature construction failed on cell {cell}: {reason}")]
    Quadrature { cell: usize, reason: String },

    #[error("level-set gradient vanishes at ({x}, {y})")]
    DegenerateGradient { x: f64, y: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at permuted index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("solution grew by a factor {growth:e} at t = {time}; time step is likely unstable")]
    Unstable { time: f64, growth: f64 },

    #[error("reference solution unusable: {0}")]
    Reference(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
