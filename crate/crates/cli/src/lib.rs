//! Batch experiments over the `qmelab` engine: the pieces behind the
//! `qmelab` binary, exposed as a library so they can be tested and fuzzed.

pub mod commands;
pub mod error;
pub mod output;
pub mod settings;

pub use error::CliError;
pub use settings::{EvalPath, Settings};
