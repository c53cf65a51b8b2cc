//! Command-line orchestration for `gwsfs`: configuration, seeded parallel
//! replicate batches, convergence tables, validation and file output.

pub mod cli;
pub mod config;
pub mod converge;
pub mod error;
pub mod estimate;
pub mod limits;
pub mod output;
pub mod simulate;
pub mod validate;

pub use cli::{execute, Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
