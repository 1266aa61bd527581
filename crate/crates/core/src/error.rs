use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("unsupported field size {p}^{d}")]
    UnsupportedField { p: u32, d: u32 },
    #[error("modulus must be monic of degree {expected} over F_{p}")]
    BadModulus { p: u32, expected: u32 },
    #[error("modulus {0:?} is reducible")]
    ReducibleModulus(Vec<u32>),
    #[error("element {0} is not a primitive element")]
    NotPrimitive(u32),
    #[error("element code {code} out of range for field of size {size}")]
    InvalidElement { code: u32, size: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{0} is not the order of a subfield")]
    NotSubfield(u32),
    #[error("automorphism power {power} is not valid for a field of degree {degree}")]
    InvalidAutomorphism { power: u32, degree: u32 },
    #[error("invalid field embedding: {0}")]
    InvalidEmbedding(String),
    #[error("field mismatch")]
    FieldMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("vectors are linearly dependent")]
    Dependent,
    #[error("product has zero divisors")]
    ZeroDivisor,
    #[error("product is not linear in its left argument")]
    NotLeftLinear,
    #[error("not a spread set: {0}")]
    NotSpreadSet(String),
    #[error("two span elements share a first row")]
    DuplicateFirstRow,
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),
    #[error("search guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
