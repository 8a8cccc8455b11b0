//! Configuration files, result archives and the commands behind the `wqed`
//! binary.

pub mod archive;
pub mod commands;
pub mod config;
pub mod error;

pub use archive::{read_manifest, read_observable, read_table, write_archive, Manifest, Table};
pub use commands::{cmd_convergence, cmd_run, cmd_sweep, cmd_validate, RunOptions};
pub use config::ExperimentFile;
pub use error::{CliError, Result};
