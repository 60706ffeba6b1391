use alloc::string::String;

/// Errors produced by the numeric core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ensemble must contain at least one particle and one dimension")]
    EmptyEnsemble,

    #[error("non-finite coordinate at particle {particle}, dimension {dim}")]
    NonFiniteCoordinate { particle: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite gradient at particle {particle}")]
    NonFiniteGradient { particle: usize },

    #[error("median bandwidth needs at least two particles, got {0}")]
    TooFewParticles(usize),

    #[error("minibatch size {requested} exceeds dataset size {available}")]
    MinibatchTooLarge { requested: usize, available: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite cost entry at ({row}, {col})")]
    NonFiniteCost { row: usize, col: usize },

    #[error("exhaustive transport oracle supports at most {max} particles, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("unsupported sampler combination: {0}")]
    UnsupportedCombination(String),

    #[error("target does not provide an exact sampler")]
    NoExactSampler,

    #[error("mode balls overlap: radius {radius} must be below {limit}")]
    OverlappingModes { radius: f64, limit: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unknown toy potential `{0}`")]
    UnknownPotential(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
