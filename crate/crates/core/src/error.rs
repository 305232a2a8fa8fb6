use thiserror::Error;

use crate::heisenberg::GroupLaw;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group law mismatch: {left} vs {right}")]
    LawMismatch { left: GroupLaw, right: GroupLaw },

    #[error("({p}, {q}) is not a pair of distinct primes with p > q")]
    NotAPrimePair { p: u64, q: u64 },

    #[error("twist must be non-zero")]
    ZeroTwist,

    #[error("point violates the joining constraint q(x1,y1) = p(x2,y2): {0}")]
    JoiningConstraint(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("value {value} out of range for `{name}` (allowed {allowed})")]
    OutOfRange {
        name: &'static str,
        value: String,
        allowed: &'static str,
    },

    #[error("discriminant |k(p^2-q^2)d1 - k(p^2-q^2)beta - beta| vanishes; beta behaves as a rational resonance")]
    ResonantDiscriminant,

    #[error("mesh of {nodes} nodes still too coarse after refinement")]
    MeshInsufficient { nodes: u64 },

    #[error("winding is not integral: total lift increment {0}")]
    NonIntegralWinding(f64),

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
