//! Two-player games on finite arenas: safety, parity, and their conjunction.

mod arena;
mod graph;

pub use arena::{solve_parity, solve_parity_and_safety, solve_safety, Arena, WinningResult};
pub use graph::{ParityGame, ParitySolution, Player};
