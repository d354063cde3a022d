//! Configuration files, diagnostics CSV and binary checkpoints.

pub mod checkpoint;
pub mod config;
pub mod csv;

use std::path::PathBuf;

use thiserror::Error;

pub use checkpoint::{read_checkpoint, read_header, write_checkpoint, CheckpointHeader};
pub use config::{parse_config, Config, ConfigError, RunConfig, SweepConfig, SystemKind};
pub use csv::{format_diagnostics, parse_diagnostics, read_diagnostics, write_diagnostics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("truncated checkpoint: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
    #[error("malformed diagnostics: {0}")]
    Format(String),
}
