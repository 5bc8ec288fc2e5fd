use alloc::string::String;

use crate::rational::Rational;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("player {player} out of range (n = {n})")]
    PlayerOutOfRange { player: usize, n: usize },
    #[error("profile length {got} does not match player count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("strategy {strategy} of player {player} outside {lo}..={hi}")]
    StrategyOutOfRange {
        player: usize,
        strategy: usize,
        lo: usize,
        hi: usize,
    },
    #[error("payoff {value} on edge ({u}, {v}) outside the declared range")]
    PayoffOutOfRange { u: usize, v: usize, value: Rational },
    #[error("enumeration of {profiles} profiles exceeds the oracle cap {cap}")]
    CapExceeded { profiles: u128, cap: u128 },
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("move {step}: player {player} already plays strategy {strategy}")]
    InvalidMove {
        step: usize,
        player: usize,
        strategy: usize,
    },
    #[error("script step {step} is not improving (delta {delta})")]
    ScriptNotImproving { step: usize, delta: Rational },
    #[error("window {window} is not within 1..={len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("range {begin}..{end} is not within a trace of {len} moves")]
    RangeOutOfBounds { begin: usize, end: usize, len: usize },
    #[error("no contiguous subrange satisfies l >= 2(d - q0)")]
    NoCriticalSubsequence,
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("flip radius {0} unsupported (only 1 and 2)")]
    UnsupportedRadius(usize),
    #[error("pivot rule not supported here: {0}")]
    UnsupportedRule(String),
    #[error("reduction refused: {0}")]
    Reduction(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
