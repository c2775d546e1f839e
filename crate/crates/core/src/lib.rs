//! Resilient abstraction-based controller synthesis.
//!
//! The pipeline has three stages:
//!
//! 1. [`abstraction`] grids a perturbed sampled-time [`system`] and builds a
//!    bimodal abstraction with *normal* transitions (nominal disturbances) and
//!    *disturbance* transitions (successors reachable only under a spike).
//! 2. [`resilience`] computes, for every abstract state, the number of spikes
//!    the best controller can tolerate (a value in `{0, 1, ..., ω, ω+1}`) and
//!    stitches an optimally resilient controller from per-level sub-controllers.
//!    It relies on the safety and parity solvers in [`games`].
//! 3. [`runtime`] refines the abstract controller into a state-feedback law,
//!    simulates the closed loop under spike schedules and verifies
//!    k-resilience of extracted controllers on the abstraction.

pub mod abstraction;
mod error;
pub mod games;
pub mod resilience;
pub mod runtime;
pub mod system;

pub use error::{Error, Result};

/// Index of an abstract state.
pub type StateId = usize;
/// Index of an abstract action (an entry of the input list).
pub type ActionId = usize;
/// Parity color (priority). The maximum color seen infinitely often must be even.
pub type Color = u32;
