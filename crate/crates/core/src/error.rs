use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("zero pivot at index {index}")]
    SingularPivot { index: usize },

    #[error("matrix not positive definite: nonpositive pivot at index {index}")]
    NotPositiveDefinite { index: usize },

    #[error("no convergence after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix too large for explicit inversion: n = {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("sketch W1^T Omega is numerically rank deficient (smallest singular value {sigma_min:e})")]
    RankDeficientSketch { sigma_min: f64 },

    #[error("Cholesky failed for shifted sketch after {attempts} shift attempts")]
    CholeskyFailure { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),
}
