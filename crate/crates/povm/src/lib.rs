//! File formats, command-line tools and a reproduction harness built on
//! [`povm_core`].

pub mod cli;
pub mod commands;
pub mod error;
pub mod format;
pub mod inputs;
pub mod manifest;
pub mod output;
pub mod reproduce;

pub use error::{Category, CliError};
pub use format::{parse_operator_file, FormatError, OperatorFile, Scalar};
