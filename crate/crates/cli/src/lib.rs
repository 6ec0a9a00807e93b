//! Presets, flags, parallel execution and file formats for `dasense-core`.

pub mod args;
mod error;
pub mod export;
pub mod preset;
pub mod runner;

pub use args::{parse_args, render_args, Cli, Format, Invocation};
pub use error::CliError;
