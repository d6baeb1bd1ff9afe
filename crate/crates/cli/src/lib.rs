//! Batch front end of the shape optimization lab: configuration parsing,
//! run orchestration and artifact export.

pub mod config;
pub mod run;

pub use config::{
    parse_config, parse_lines, read_config_file, Check, Command, ConfigError, Method, RunConfig,
};
pub use run::{run, Outcome, RunError, Status};
