use thiserror::Error;

use crate::system::ProblemViolation;
use crate::StateId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integration diverged: non-finite state {state:?}")]
    IntegrationDiverged { state: Vec<f64> },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid problem: {}", join_violations(.0))]
    InvalidProblem(Vec<ProblemViolation>),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cell {cell} straddles a color boundary (colors {first} and {second}); align regions to the grid")]
    ColorStraddle {
        cell: StateId,
        first: u32,
        second: u32,
    },

    #[error("state {state} is out of range (abstraction has {num_states} states)")]
    UnknownState { state: StateId, num_states: usize },

    #[error("state x={x:?} is outside the controller domain ({reason})")]
    OutOfControllerDomain { x: Vec<f64>, reason: &'static str },

    #[error("oracle size guard exceeded: {states} states (limit {limit})")]
    OracleTooLarge { states: usize, limit: usize },

    #[error("resilience fixed point did not terminate within {0} iterations")]
    NonTermination(usize),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[ProblemViolation]) -> String {
    v.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
