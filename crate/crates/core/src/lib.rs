//! Exact tame local fields, admissible pairs and epsilon factors of simple
//! cuspidal representations of `GL(n, F)`, with exhaustive verifiers.

pub mod characters;
pub mod cyclo;
pub mod epsilon;
pub mod error;
pub mod hereditary;
pub mod localfield;
pub mod pairs;
pub mod verify;

pub use error::{Error, Result};

use num_rational::BigRational;

/// Cyclotomic numbers with arbitrary-precision rational coordinates.
pub type Cyclo = cyclo::CycNum<BigRational>;
/// `Q(ζ_N)[√q]` with arbitrary-precision rational coordinates.
pub type QHalf = cyclo::QHalfExt<BigRational>;
/// Cyclotomic numbers over `i64` rationals, for small hand computations.
pub type CycloSmall = cyclo::CycNum<num_rational::Rational64>;
