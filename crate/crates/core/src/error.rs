use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:e}); regularize first")]
    SingularMatrix { min_eigenvalue: f64 },
    #[error("index ({i}, {j}) out of range for dimension {k}")]
    Index { i: usize, j: usize, k: usize },
    #[error("coordinate {index} has zero variance; regularize first")]
    ZeroVariance { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("moment order must be nonnegative, got {0}")]
    NegativeOrder(f64),
    #[error("Sudakov-Fernique condition violated at {pairs:?}")]
    SfConditionViolated { pairs: Vec<(usize, usize)> },
    #[error("strengthened covariance condition violated at {pairs:?}")]
    StrongConditionViolated { pairs: Vec<(usize, usize)> },
    #[error("covariance still singular after regularization")]
    SingularAfterRegularize,
    #[error("|corr| = {0} is too close to 1")]
    DegenerateCorrelation(f64),
    #[error("quadrature did not converge within {evaluations} evaluations (error estimate {error_estimate:e})")]
    QuadratureNonconvergence {
        evaluations: usize,
        error_estimate: f64,
    },
    #[error("instance generation exhausted after {0} attempts")]
    GenerationExhausted(usize),
}
