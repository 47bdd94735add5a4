//! The constrained attention network.
//!
//! A sentence is embedded and run through an LSTM. Each mentioned aspect
//! category attends over the hidden states to form a representation for
//! sentiment classification; in multi-task models a second attention with
//! its own parameters scores every category for detection. Attention rows
//! can be pushed towards sparsity ([`sparse_reg`]) and, for sentences whose
//! aspects occupy disjoint text, towards mutual orthogonality
//! ([`orthogonal_reg`]).
//!
//! Everything is expressed on an [`autodiff::Tape`](crate::autodiff::Tape)
//! so one [`forward`] call yields both predictions and a differentiable loss.

mod checkpoint;
mod config;
mod model;
mod params;
mod regularizer;

pub use checkpoint::ParamFile;
pub use config::{Architecture, Gram, ModelConfig, Regularizer, NAMED_VARIANTS};
pub use model::{
    acd_attention, acd_loss, acd_predict, alsc_attention, alsc_logits, alsc_loss, alsc_predict, alsc_represent,
    aspect_embedding, embed, encode, forward, total_loss, Forward, ForwardOutput, InstanceInput, NoNoise, Noise,
    LOG_FLOOR,
};
pub use params::*;
pub use regularizer::{
    apply_regularizer, build_acd_matrix, orthogonal_reg, orthogonal_reg_value, regularizer_for_instance, sparse_reg,
    sparse_reg_value,
};

use crate::autodiff::AutodiffError;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("parameter mismatch: {0}")]
    Params(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{path}:{line}: {message}")]
    Checkpoint { path: String, line: usize, message: String },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
