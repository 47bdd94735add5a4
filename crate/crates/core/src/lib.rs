//! Constrained attention networks for multi-aspect sentiment analysis.
//!
//! The crate is organised bottom-up:
//!
//! * [`autodiff`]: a small tape-based reverse-mode differentiation engine.
//! * [`corpus`]: SemEval readers, overlap annotations, vocabulary, embeddings,
//!   synthetic corpora, splitting and batching.
//! * [`network`]: the LSTM encoder, aspect attention for sentiment
//!   classification and category detection, sparse and orthogonal attention
//!   regularizers, prediction heads and losses.
//! * [`training`]: parameter initialisation, dropout, Adagrad and the
//!   early-stopping training loop.
//! * [`evaluation`]: metrics, attention heatmaps and run comparison.
//! * [`cli`]: configuration and the commands behind the `can` binary.

pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod evaluation;
pub mod network;
pub mod training;

mod seed;
