//! Command-line front end: experiment files, sweeps over grid files and
//! SVG figures from results tables.

pub mod commands;
pub mod config;
pub mod grid;
pub mod output;
pub mod plot;

pub use commands::{execute, Cli};
pub use config::{parse_config, parse_config_str, to_toml, ConfigError};
