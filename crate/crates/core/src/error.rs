use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("seed is the all-zero state, which lies outside the main cycle")]
    ZeroSeed,
    #[error("malformed polynomial {0:#b}: g_0 and g_n must both be 1")]
    MalformedPolynomial(u64),
    #[error("order {order} exceeds the supported bound {max}")]
    OrderTooLarge { order: u32, max: u32 },
    #[error("order {0} has fewer than two primitive polynomials")]
    InsufficientPrimitives(u32),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("randomness adjustment did not converge within {0} rounds")]
    NoConvergence(u32),
    #[error("voter width must be odd and positive, got {0}")]
    EvenVoterWidth(u32),
    #[error("empty input")]
    EmptyInput,
    #[error("non-monotonic ticks: {prev} then {next}")]
    NonMonotonicTicks { prev: u64, next: u64 },
    #[error("tick gap {0} leaves no room for the response frame (need t >= 2)")]
    TickGapTooSmall(u64),
    #[error("the disposable interface has been fused")]
    InterfaceFused,
    #[error("naked CRP table is missing challenge {0:#x}")]
    IncompleteTable(u64),
    #[error("no table entry for challenge {0:#x}")]
    MissingEntry(u64),
    #[error("attacker store is empty")]
    EmptyStore,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("sample of {got} challenges is below the minimum {min}")]
    InsufficientSample { got: usize, min: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
