//! File formats, configuration and commands behind the `nmfeb` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use commands::{cmd_check, cmd_fit, cmd_simulate, fit_report, FitOutcome, Overrides};
pub use config::RunConfig;
pub use error::CliError;
