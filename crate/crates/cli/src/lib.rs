//! Command-line front end: configuration parsing, CSV/JSON output and the
//! subcommands of the `sdde` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;
pub mod output;

pub use commands::{run, CliError, Command};
