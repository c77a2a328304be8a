//! Codensity bisimilarities and bisimilarity games for finite coalgebras.
//!
//! The crate is `no_std` (it needs `alloc`). Layers, bottom-up:
//!
//! - [`fiber`]: complete lattices of indistinguishability structures over a
//!   finite carrier (equivalences, endorelations, preorders, 1-bounded
//!   pseudometrics, topologies) with pullback, pushforward and decency.
//! - [`system`]: finite coalgebras (Kripke frames, Markov chains, DFAs,
//!   NFAs) and the shipped fixtures.
//! - [`lifting`]: codensity predicate transformers, including the exact
//!   Kantorovich linear program.
//! - [`fixpoint`]: Kleene iteration from the top of a fiber.
//! - [`game`]: safety-game arenas, invariants, winning regions, positional
//!   strategies and play simulation.
//! - [`instances`]: the concrete games and analyses built on the above.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fiber;
pub mod fixpoint;
pub mod game;
pub mod instances;
pub mod lifting;
pub mod lp;
pub mod rational;
pub mod system;

pub use error::{Error, Result};
pub use fiber::{Carrier, CarrierMap, FiberElement, FiberKind};
pub use rational::Q;
