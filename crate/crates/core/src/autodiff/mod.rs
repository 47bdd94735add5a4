//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every operation of a forward pass against a borrowed
//! [`ParamStore`]. [`Tape::backward`] sweeps the record in reverse and returns
//! the parameter gradients; uses of the same parameter accumulate.
//!
//! ```
//! use can_core::autodiff::{ParamStore, Tape, Tensor};
//!
//! let mut store = ParamStore::new();
//! let theta = store.insert("theta", Tensor::vector(vec![1.0, 2.0]), true).unwrap();
//! let mut tape = Tape::new(&store);
//! let x = tape.param(theta);
//! let sq = tape.square(x);
//! let loss = tape.sum(sq);
//! let grads = tape.backward(loss).unwrap().params;
//! assert_eq!(grads.dense(theta, &[2]).data(), &[2.0, 4.0]);
//! ```

mod check;
mod params;
mod tape;
mod tensor;

pub use check::{finite_diff_check, GradCheckReport};
pub use params::{Grad, Gradients, ParamId, ParamStore, Parameter};
pub use tape::{Backward, ElementwiseKind, ReduceKind, Tape, Var};
pub use tensor::Tensor;


#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("backward root must be scalar, got shape {0:?}")]
    NonScalar(Vec<usize>),
    #[error("softmax over an empty or fully masked input")]
    EmptySoftmax,
    #[error("invalid axis {axis} for shape {shape:?}")]
    Axis { axis: usize, shape: Vec<usize> },
    #[error("{op} takes {expected} operands, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("duplicate parameter name {0}")]
    DuplicateParam(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}
