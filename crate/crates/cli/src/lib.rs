//! Library surface of the `qesn` command-line pipeline: run configuration,
//! CSV formats and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
