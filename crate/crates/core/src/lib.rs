//! Toolkit for the hourglass network, a system of interacting renewal
//! processes.
//!
//! Each site carries a countdown `x_i` that decreases at unit speed. When a
//! countdown hits zero the site fires: it is refilled with a fresh
//! self-characteristic `Y`, and every neighbour receives an impulse.
//! Inhibitory impulses push the neighbour's countdown up; excitatory ones pull
//! it down and fire it immediately when they overshoot (a depth-one cascade).
//!
//! The crate is split into
//!
//! - [`stochastic`]: seeded sampling and distribution specifications,
//! - [`topology`]: the torus with a checkerboard excitatory sublattice and the
//!   fully connected block network,
//! - [`network`]: connection laws on top of a topology,
//! - [`dynamics`]: the exact event-driven engine,
//! - [`analysis`]: firing frequencies, the second vector field, the inductive
//!   ergodic/transient classifier and the critical inhibition curve,
//! - [`patterns`]: trap enumeration for the block network and Hebbian storage.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod network;
pub mod patterns;
pub mod stochastic;
pub mod topology;

pub use error::{Error, Result};

/// Set of site indices, iterated in ascending order.
pub type SiteSet = std::collections::BTreeSet<usize>;
