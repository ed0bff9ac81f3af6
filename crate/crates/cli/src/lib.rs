//! Configuration, orchestration and file output for the `quadfuse` binary.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{parse_config, parse_config_str, Emit, Settings};
pub use run::{execute, RunManifest, RunResult};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}:{line}: `{key}` {reason}", path.display())]
    Constraint {
        path: PathBuf,
        line: usize,
        key: String,
        reason: String,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] quadfuse::Error),
}
