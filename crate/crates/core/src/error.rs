use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("invalid generator parameter: {0}")]
    InvalidGenerator(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("zero pivot at index {0} in bidiagonal solve (B is singular)")]
    SingularBidiagonal(usize),

    #[error("matrix is not positive definite (Cholesky pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dense SVD did not converge after {0} sweeps")]
    SvdNoConvergence(usize),

    #[error("symmetric eigensolver did not converge after {0} sweeps")]
    EigNoConvergence(usize),

    #[error("bidiagonalization breakdown: {0}")]
    Breakdown(String),

    #[error("refined vector {index} has a degenerate split (|x| = {x_norm:e}, |y| = {y_norm:e})")]
    DegenerateSplit { index: usize, x_norm: f64, y_norm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
