//! Library side of the `hedopt` command: configuration, campaign
//! orchestration, file formats and plotting.

pub mod campaign;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod svg;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{CliError, Result};
