//! Command-line front end for the `plap-core` pipelines: TOML configs,
//! dispatch, and CSV/summary outputs with a digest manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, Command, Job, RunConfig};
pub use error::{CliError, CliResult};
pub use output::{Manifest, OutputSet};
pub use run::{execute, run_command, Outcome, Status};
