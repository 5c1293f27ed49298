use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports. Variants carry enough context to
/// reproduce the offending input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("element {element} is not a reduced element of {ring}")]
    ElementOutOfRange { element: String, ring: String },
    #[error("unsupported norm value: {0}")]
    UnsupportedValue(String),
    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),
    #[error("validation failed for {law}: {witness}")]
    ValidationFailure { law: String, witness: String },
    #[error("size limit exceeded: {0}")]
    SizeExceeded(String),
    #[error("set {0} is not clopen")]
    NotClopen(String),
    #[error("map is not continuous at point {point}")]
    NotContinuous { point: usize },
    #[error("operands live on different spaces or rings")]
    SpaceMismatch,
    #[error("map is not a zeta-embedding: components {0} and {1} merge")]
    NotEmbedding(usize, usize),
    #[error("function does not vanish on the prescribed set (point {0})")]
    NotInIdeal(usize),
    #[error("no clopen separates the sets")]
    CannotSeparate,
    #[error("base point {point} is not admissible for {ring}")]
    RingMismatch { point: String, ring: String },
    #[error("oracle does not define an ultrafilter: {0}")]
    NotUltrafilter(String),
    #[error("oracle restricted to constants matches no admissible base point: {0}")]
    UnrecognizedBasePoint(String),
    #[error("spectrum of {ring} is disconnected (idempotents {idempotents:?})")]
    DisconnectedSpectrum {
        ring: String,
        idempotents: Vec<i128>,
    },
    #[error("norm modes differ or are not non-Archimedean")]
    ModeMismatch,
    #[error("unsupported ring homomorphism {from} -> {to}")]
    UnsupportedHom { from: String, to: String },
    #[error("cover verdict {is_cover} disagrees with exactness verdict {exact}")]
    EquivalenceViolation { is_cover: bool, exact: bool },
    #[error("cocycle condition fails on pieces ({i}, {j}, {k}) at point {point}")]
    CocycleViolation {
        i: usize,
        j: usize,
        k: usize,
        point: usize,
    },
    #[error("family covers the space")]
    IsCover,
    #[error("family does not cover the space")]
    NotCover,
    #[error("no section at degree {0}")]
    NoSection(usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("generators do not separate components {0} and {1}")]
    NonSeparating(usize, usize),
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("integer overflow")]
    Overflow,
    #[error("space is not totally disconnected")]
    NotTotallyDisconnected,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
