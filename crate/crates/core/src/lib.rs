//! Simulation of deterministic W-state preparation in cavity QED: one
//! two-level atom interacting resonantly and simultaneously with `N`
//! identical cavity modes.
//!
//! The crate is split by concern:
//! - [`fock_space`]: truncated atom ⊗ Fock basis and state vectors.
//! - [`dynamics`]: Hamiltonian, closed-form evolution, numeric propagator.
//! - [`entanglement`]: W/GHZ targets, fidelity, partial trace, concurrence.
//! - [`protocol`]: optimal interaction time and robustness sweeps.
//! - [`validation`]: the invariant suite behind `wstate validate`.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod fock_space;
pub mod format;
pub mod protocol;
pub mod validation;

pub use error::{Error, Result};

/// Version tag embedded in every file the CLI writes.
pub const SCHEMA_VERSION: &str = "wstate/1";
