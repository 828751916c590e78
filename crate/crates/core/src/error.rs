use num_bigint::{BigInt, BigUint};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid orbit {index}: {reason}")]
    InvalidOrbit { index: usize, reason: String },

    #[error("orbits {first} and {second} share a rational common factor")]
    OrbitCollision { first: usize, second: usize },

    #[error("n = {0} is a branch point")]
    BranchPoint(BigInt),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A prime above p0 met two distinct orbits; p0 is too small for this cover.
    #[error("internal consistency violated at n = {n}: prime {prime} divides orbits {first} and {second}")]
    InternalConsistency {
        n: BigInt,
        prime: BigUint,
        first: usize,
        second: usize,
    },

    #[error("normalization undefined for N = {0} (need N >= 3)")]
    NormalizationUndefined(u64),

    #[error("moment accumulator mismatch: {0}")]
    AccumulatorMismatch(String),

    #[error("exact power sum overflowed i128")]
    Overflow,

    #[error("factorization into certified irreducibles failed for {0}; supply the orbit factors explicitly")]
    FactorizationFailed(String),

    #[error("cover JSON: {0}")]
    Json(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
