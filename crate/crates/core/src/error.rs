use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("elements belong to different generator registries ({left} vs {right} pairs)")]
    RegistryMismatch { left: usize, right: usize },
    #[error("generator index {index} out of range for {pairs} pairs")]
    GeneratorOutOfRange { index: usize, pairs: usize },
    #[error("registry needs between 1 and {max} generator pairs, got {got}")]
    InvalidPairCount { got: usize, max: usize },
    #[error("integration order must list every generator exactly once: {0}")]
    BadIntegrationOrder(String),
    #[error("exponential needs an even element")]
    OddExponent,
    #[error("exponential needs an element with zero scalar part; factor the scalar out first")]
    NonzeroScalarPart,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty index set")]
    EmptySubset,
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite; try regularizing with C + eps*I")]
    NotPositiveDefinite,
    #[error("invalid split n1={n1} for dimension {n}")]
    InvalidSplit { n1: usize, n: usize },
    #[error("interpolation parameter {0} outside [0, 1]")]
    TauOutOfRange(f64),
    #[error("Heaviside argument is exactly on the boundary (a = 0)")]
    DegenerateBoundary,
    #[error("test function does not decay: {0}")]
    NoDecay(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
