//! Experiment orchestration for the euler2d simulator: configuration, CSV
//! tables, the sweep recipes and the command-line subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod pool;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use error::{HarnessError, Result};
pub use table::Table;
