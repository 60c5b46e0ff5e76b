use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("not invertible")]
    NotInvertible,

    #[error("root of unity of order 0")]
    ZeroOrder,

    #[error("invalid field parameters: {0}")]
    InvalidParams(String),

    #[error("wild degree unsupported: gcd(n = {n}, p = {p}) != 1")]
    WildDegree { n: u64, p: u64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("precision error: coefficient at exponent {exponent} is not determined (absolute precision {abs_prec})")]
    Precision { exponent: i64, abs_prec: i64 },

    #[error("zero element where a unit is required")]
    ZeroInput,

    #[error("not a one-unit")]
    NotOneUnit,

    #[error("level exceeds wild-exponent bound: level {level} requires p > {level}, got p = {p}")]
    WildBound { level: u64, p: u64 },

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("outside the simple-cuspidal epsilon formula scope: {0}")]
    OutOfScope(String),

    #[error("level-zero character refused: {0}")]
    LevelZero(String),

    #[error("enumeration budget exceeded: {size} elements > budget {budget}")]
    Budget { size: u128, budget: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed serialized object: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
