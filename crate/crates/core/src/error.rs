use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported algebra family `{0}`")]
    UnsupportedFamily(String),
    #[error("rank parameter {n} too small for {family} (need at least {min})")]
    RankTooSmall { family: String, n: usize, min: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("vectors are linearly dependent (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("representations act through different algebras ({0} vs {1})")]
    AlgebraMismatch(String, String),
    #[error("operator {index} is not skew-symmetric (residual {residual:e})")]
    NotSkewSymmetric { index: usize, residual: f64 },
    #[error("representation has no complex structure; `{0}` needs one")]
    NotComplex(String),
    #[error("Killing ratio is not constant (spread {spread:e})")]
    NonConstantRatio { spread: f64 },
    #[error("map is not an injective algebra homomorphism: {0}")]
    NotAnEmbedding(String),
    #[error("coupled metric requires a space with identical factors")]
    CoupledOnPairSpace,
    #[error("operation requires a diagonal metric")]
    CoupledSpec,
    #[error("invalid metric parameters: {0}")]
    InvalidMetric(String),
    #[error("metric is not certified geodesic orbit")]
    NotCertifiedGO,
    #[error("Weyl dimension formula gave a non-integer value {0}")]
    NonIntegerResult(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("representation not constructible: {0}")]
    RepNotConstructible(String),
    #[error("unknown catalog case `{0}`")]
    UnknownCase(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid space specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
