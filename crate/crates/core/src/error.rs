use thiserror::Error;

/// Errors raised across the field, code and PIR layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime modulus")]
    NotPrime(u64),
    #[error("modulus {0} is too large (must be below 2^32)")]
    ModulusTooLarge(u64),
    #[error("field mismatch: F_{left} vs F_{right}")]
    FieldMismatch { left: u64, right: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {value} is outside [0, {p})")]
    OutOfRange { value: u64, p: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("coefficient matrix is rank deficient (rank {rank}, need {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("generator matrix is zero")]
    ZeroMatrix,
    #[error("code has full dimension, its dual is the zero code")]
    TrivialDual,
    #[error("enumeration budget exceeded: {work} > {budget}")]
    BudgetExceeded { work: u128, budget: u128 },
    #[error("expected {expected} coordinates, got {got}")]
    WrongSize { expected: usize, got: usize },
    #[error("coordinate {index} out of range for length {len}")]
    CoordinateOutOfRange { index: usize, len: usize },

    #[error("invalid GRS parameters: {0}")]
    InvalidGrs(String),
    #[error("GRS code already has full dimension")]
    FullDimension,
    #[error("GRS evaluation points differ")]
    AlphaMismatch,

    #[error("{failed} failed servers leave fewer than k = {k} survivors")]
    TooManyFailures { failed: usize, k: usize },
    #[error("surviving servers contain no information set")]
    NoInformationSet,

    #[error("scheme has rate zero (d(C*D) - 1 = 0)")]
    RateZero,
    #[error("no valid server set J: {0}")]
    NoValidJ(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("responses do not determine the targeted symbols (iteration {iteration})")]
    SingularSystem { iteration: usize },
    #[error("responses are inconsistent with the scheme (iteration {iteration})")]
    InconsistentResponses { iteration: usize },
    #[error("retrieved positions for row {row} are not an information set")]
    NotInformationSet { row: usize },
    #[error("incomplete transcript: {0}")]
    IncompleteTranscript(String),

    #[error("invalid collusion set: {0}")]
    InvalidCollusionSet(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
