//! Scenario files, run orchestration and result emission for the
//! `xlwifi` simulator.

pub mod commands;
pub mod error;
pub mod lut_io;
pub mod output;
pub mod presets;
pub mod scenario;

pub use error::{CliError, CliResult};
