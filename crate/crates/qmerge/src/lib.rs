//! File formats, experiment sweeps and the command-line runner around
//! `qmerge-core`.

pub mod cli;
pub mod demo;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod oracle_file;

pub use error::{CliError, Result};
