//! The `mgclr` command line: synthetic data, augmentation previews,
//! pretraining, linear evaluation, score fusion and the emotion harness.
//!
//! Every successful run writes a `<command>.run.json` manifest next to its
//! outputs and prints a one-line JSON summary. Failures print one JSON line
//! on stderr and exit with 2 (usage), 3 (configuration) or 1 (anything else).

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use args::Cli;
pub use error::{CliError, CliResult};
