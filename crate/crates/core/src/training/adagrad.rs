use crate::autodiff::{ParamStore, Tensor};

/// Per-parameter running sums of squared gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct AdagradState {
    pub accumulators: Vec<Tensor>,
}

impl AdagradState {
    pub fn new(params: &ParamStore) -> Self {
        Self { accumulators: params.iter().map(|(_, p)| Tensor::zeros(p.value.shape())).collect() }
    }
}

/// `acc += g²; θ −= lr · g / (√acc + eps)` on every trainable parameter,
/// using the gradients stored in `params`.
pub fn adagrad_step(params: &mut ParamStore, state: &mut AdagradState, lr: f64, eps: f64) {
    assert_eq!(state.accumulators.len(), params.len(), "optimizer state does not match parameters");
    for (p, acc) in params.iter_mut().zip(&mut state.accumulators) {
        if !p.trainable {
            continue;
        }
        assert_eq!(acc.shape(), p.value.shape(), "accumulator shape mismatch for {}", p.name);
        let grads = p.grad.data();
        for ((theta, a), &g) in p.value.data_mut().iter_mut().zip(acc.data_mut()).zip(grads) {
            if g == 0.0 {
                continue;
            }
            *a += g * g;
            *theta -= lr * g / (a.sqrt() + eps);
        }
    }
}
