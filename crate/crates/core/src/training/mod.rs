//! Parameter initialisation, dropout, Adagrad and the early-stopping
//! training loop, plus the checkpoint and history files it produces.

mod adagrad;
mod checkpoint;
mod config;
mod dropout;
mod history;
mod init;
mod train;

pub use adagrad::{adagrad_step, AdagradState};
pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use dropout::{dropout, dropout_mask, Dropout};
pub use history::{EpochRecord, History, COLUMNS};
pub use init::init_params;
pub use train::{train, EarlyStopping, TrainOutcome};

use crate::autodiff::AutodiffError;
use crate::corpus::CorpusError;
use crate::evaluation::EvalError;
use crate::network::NetworkError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("non-finite {term} ({value}) at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize, term: &'static str, value: f64 },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl From<AutodiffError> for TrainError {
    fn from(e: AutodiffError) -> Self {
        TrainError::Network(e.into())
    }
}
