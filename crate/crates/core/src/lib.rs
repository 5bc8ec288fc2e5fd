//! Exact algorithms for pure Nash equilibria in network coordination games.
//!
//! Everything here is `no_std` with `alloc`: payoffs and potentials are exact
//! rationals, traces are plain vectors, and randomness comes from seeded
//! counter-based ChaCha streams. File formats, the CLI and the experiment
//! harness live in the `nashlab` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod congestion;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod maxcut;
pub mod rank;
pub mod rational;
pub mod reduction;
pub mod rng;
pub mod smoothing;

pub use error::{Error, Result};
pub use game::{GameInstance, Move, StrategyProfile};
pub use rational::Rational;
