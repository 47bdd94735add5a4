//! Run configuration and the commands behind the `can` binary.
//!
//! Settings come from a flat `key = value` file, overridden by flags of the
//! same names. Errors carry an exit code: 1 for i/o and other failures, 2
//! for configuration errors, 3 for data errors and 4 when training hits a
//! non-finite loss.

mod commands;
mod config;
mod data;

use std::path::Path;

pub use commands::{
    cmd_compare, cmd_eval, cmd_prepare, cmd_train, cmd_visualize, load_checkpoint, parse_aspects, Source, Target,
    CHECKPOINT_FILE, HISTORY_FILE, RUN_CONFIG_FILE,
};
pub use config::{Dataset, RunConfig, DATA_ROOT_VAR, KEYS};
pub use data::{load_data, load_prepared, DataSplits};

use crate::evaluation::EvalError;
use crate::network::NetworkError;
use crate::training::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    /// The message without the category prefix.
    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) | CliError::Other(m) => m.clone(),
            io => io.to_string(),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Config(m) => CliError::Config(m),
            NetworkError::Checkpoint { .. } | NetworkError::Params(_) => CliError::Data(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Network(n) => n.into(),
            EvalError::Threshold(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(m) => CliError::Config(m),
            TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            TrainError::Format { .. } => CliError::Data(e.to_string()),
            TrainError::Network(n) => n.into(),
            TrainError::Eval(ev) => ev.into(),
            TrainError::Corpus(c) => c.into(),
        }
    }
}
