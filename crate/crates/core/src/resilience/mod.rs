//! Resilience of abstract states against disturbance spikes, and the
//! controllers that achieve it.

mod controller;
mod oracle;
mod random;
mod ranking;
mod value;

pub use controller::{
    classify, Classification, ResilientController, SubController, SubControllerKind, CONTROLLER_FORMAT,
    CONTROLLER_VERSION, SWITCHING_RULE,
};
pub use oracle::{brute_force_resilience, ORACLE_STATE_LIMIT};
pub use random::{random_bimodal, RandomParams};
pub use ranking::{
    disturbance_update, finite_resilience, initial_ranking, risk_update, strategy_pruning, FiniteResilience,
    LevelControllers, Mode, Ranking,
};
pub use value::{ResilienceMap, ResilienceValue};
