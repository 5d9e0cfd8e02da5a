//! Scenario runner behind the `plap` command.
//!
//! A scenario file selects a problem, grid and solver settings; [`run::run`]
//! executes one command on it, writes CSV and JSON artifacts and a
//! [`artifacts::RunManifest`] that lists every artifact with its hash.

pub mod artifacts;
pub mod config;
pub mod run;

pub use artifacts::{RunManifest, Status};
pub use config::{parse_config, Command, ConfigError, ScenarioConfig};
pub use run::{run, RunOptions, RunResult};
