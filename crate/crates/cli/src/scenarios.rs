//! Built-in scenarios, embedded as configuration documents.

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};

pub const BUILTINS: &[(&str, &str)] = &[
    (
        "reach_avoid_two_passages",
        include_str!("../scenarios/reach_avoid_two_passages.toml"),
    ),
    (
        "two_targets_buchi_cobuchi",
        include_str!("../scenarios/two_targets_buchi_cobuchi.toml"),
    ),
    ("two_targets_obstacles", include_str!("../scenarios/two_targets_obstacles.toml")),
];

/// Source text of a built-in scenario.
pub fn builtin_text(name: &str) -> CliResult<&'static str> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let known: Vec<&str> = BUILTINS.iter().map(|(n, _)| *n).collect();
            CliError::Reference(format!("unknown scenario {name:?}; known: {}", known.join(", ")))
        })
}

pub fn builtin(name: &str) -> CliResult<ScenarioConfig> {
    ScenarioConfig::parse(builtin_text(name)?)
}
