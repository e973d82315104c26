use thiserror::Error;

/// Errors raised by the numerical and image-modeling kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("eigensolver did not converge within {0} iterations")]
    ConvergenceFailure(usize),
    #[error("power exponent {0} outside (0, 1]")]
    InvalidRho(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("image {width}x{height} too small: {reason}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        reason: String,
    },
    #[error("need at least 2 samples to fit a Gaussian, got {0}")]
    TooFewSamples(usize),
    #[error("embedded Gaussians differ in parameters or dimension")]
    ParamMismatch,
    #[error("pyramid region {region} is too small ({width}x{height} pixels)")]
    RegionTooSmall {
        region: usize,
        width: usize,
        height: usize,
    },
    #[error("pyramid region {region} holds {count} descriptors, need at least 2")]
    EmptyRegion { region: usize, count: usize },
    #[error("rank {rank} exceeds limit {limit}")]
    RankTooLarge { rank: usize, limit: usize },
    #[error("SVM dual solver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
}

pub type Result<T> = std::result::Result<T, Error>;
