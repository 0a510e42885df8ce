//! Experiment harness behind the `rdk` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod freq;
pub mod io;
pub mod simulate;
pub mod sweep;

pub use error::{HarnessError, HarnessResult};
