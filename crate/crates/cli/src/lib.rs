//! Front end for resilient controller synthesis: scenario configuration
//! files, built-in scenarios and the file-producing pipeline stages used by
//! the `rescot` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod scenarios;

pub use config::{Problem, ScenarioConfig};
pub use error::{CliError, CliResult};
