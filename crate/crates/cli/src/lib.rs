//! Command-line driver: argument parsing and the subcommands behind
//! `curvreg`.

pub mod args;
pub mod commands;

pub use args::Cli;
pub use commands::run;
