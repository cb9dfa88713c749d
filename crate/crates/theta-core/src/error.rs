use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("precision {0} is below the minimum of 4")]
    PrecisionTooLow(u32),
    #[error("operation requires an odd prime, got p = {0}")]
    EvenPrime(u64),
    #[error("zero argument: {0}")]
    ZeroArgument(&'static str),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("{what} did not stabilize by level {limit}")]
    NotStabilized {
        what: String,
        limit: u32,
        partials: Vec<[f64; 2]>,
    },
    #[error("kappa is not represented by the norm form")]
    NotRepresented,
    #[error("base point search exhausted after {0} candidates")]
    SearchExhausted(usize),
    #[error("inadmissible configuration: {0}")]
    Inadmissible(String),
    #[error("near-zero extension failed: {0}")]
    Extension(String),
    #[error("mismatched primes: {0} vs {1}")]
    FieldMismatch(u64, u64),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ThetaError>;
