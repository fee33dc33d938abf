use thiserror::Error;

/// Errors produced by the estimators and linear algebra kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("sample covariance is not positive semi-definite (min eigenvalue {min_eig} below tolerance)")]
    NotPsd { min_eig: f64 },

    #[error("symmetric eigensolver failed to converge within the iteration cap")]
    EigenNoConvergence,

    #[error("materialized dimension {dim} exceeds the configured cap {cap}")]
    SizeLimit { dim: usize, cap: usize },

    #[error("mode index {mode} out of range for order-{order} dims")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("partial trace for mode {mode} is rank deficient")]
    RankDeficientMode { mode: usize },

    #[error("diagonal block {index} of the sample covariance is singular")]
    SingularBlock { index: usize },

    #[error("flip-flop iterate lost positive definiteness; sample is degenerate for the MLE")]
    DegenerateSample,

    #[error("compound-symmetry fit lies outside the positive-definite cone")]
    BoundaryFit,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
