//! Library side of the `cp-sphere` command: configuration, execution and
//! output formats. The binary in `main.rs` only parses arguments.

pub mod config;
pub mod csv;
pub mod error;
pub mod plot;
pub mod run;
pub mod units;

pub use config::{RunConfig, Settings};
pub use error::CliError;
pub use run::{execute, Command, Preset};
