use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("construction unavailable: {0}")]
    ConstructionUnavailable(String),

    #[error("LFSR seed must be nonzero")]
    ZeroSeed,

    #[error("feedback polynomial is not primitive: period {period} < {expected}")]
    NonPrimitivePolynomial { period: usize, expected: usize },

    #[error("design contains no zero run")]
    NoZeroRun,

    #[error("K = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("p must be nonnegative, got {0}")]
    NegativeP(f64),

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bound requires K >= 4, got K = {0}")]
    BoundRequiresK4(usize),

    #[error("invalid block matrix: {0}")]
    InvalidBlockMatrix(String),

    #[error("block matrix is not positive definite after centering")]
    BlockNotPositiveDefinite,

    #[error("search budget exceeded: {required} evaluations needed, cap is {cap}")]
    CapExceeded { required: u64, cap: u64 },

    #[error("noise covariance is not positive definite")]
    CovarianceNotPositiveDefinite,

    #[error("singular normal equations: rank {rank} < {expected}")]
    SingularFit { rank: usize, expected: usize },

    #[error("invalid design record: {0}")]
    InvalidRecord(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
