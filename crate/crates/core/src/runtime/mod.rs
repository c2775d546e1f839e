//! Deploying abstract controllers: refinement to a state feedback law,
//! closed-loop simulation with spike injection, and verification of
//! resilience at the abstract level.

mod refine;
mod simulate;
mod verify;

pub use refine::{Decision, RefinedController};
pub use simulate::{
    num_abstract_spikes, num_spikes, simulate_closed_loop, NominalDisturbance, RowVerdict, SpikeSchedule, Trace,
    TraceRow, TraceVerdict,
};
pub use verify::verify_k_resilient;
