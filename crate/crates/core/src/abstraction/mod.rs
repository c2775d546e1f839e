//! Uniform-grid quantization and risk-aware (bimodal) abstractions.

mod bimodal;
mod build;
mod dump;
mod grid;
mod transitions;

pub use bimodal::{BimodalAbstraction, BimodalBuilder};
pub use build::{
    apply_obstacle_sinks, check_frr_sample, find_abstraction, find_risk_aware_abstraction, lift_colors,
    obstacle_cells, worst_odd_color, FrrReport,
};
pub use dump::{ABSTRACTION_FORMAT, ABSTRACTION_VERSION};
pub use grid::{GridParams, Quantizer, FACE_TOLERANCE};
pub use transitions::TransitionMap;
