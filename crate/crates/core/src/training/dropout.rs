use rand::Rng;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::network::Noise;

/// Inverted dropout mask: each entry is 0 with probability `p`, otherwise `1/(1−p)`.
pub fn dropout_mask<R: Rng>(shape: &[usize], p: f64, rng: &mut R) -> Tensor {
    let keep = 1.0 / (1.0 - p);
    let mut mask = Tensor::filled(shape, keep);
    if p > 0.0 {
        for v in mask.data_mut() {
            if rng.gen::<f64>() < p {
                *v = 0.0;
            }
        }
    }
    mask
}

/// Inverted dropout on a plain tensor; the identity when not training or `p = 0`.
pub fn dropout<R: Rng>(x: &Tensor, p: f64, training: bool, rng: &mut R) -> Tensor {
    assert!((0.0..1.0).contains(&p), "dropout probability must lie in [0, 1)");
    if !training || p == 0.0 {
        return x.clone();
    }
    let mask = dropout_mask(x.shape(), p, rng);
    let data = x.data().iter().zip(mask.data()).map(|(a, m)| a * m).collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Dropout as a tape layer, drawing masks from its own generator.
pub struct Dropout<R> {
    pub p: f64,
    pub rng: R,
}

impl<R: Rng> Noise for Dropout<R> {
    fn apply(&mut self, tape: &mut Tape<'_>, x: Var) -> Result<Var, AutodiffError> {
        if self.p == 0.0 {
            return Ok(x);
        }
        let mask = dropout_mask(tape.shape(x), self.p, &mut self.rng);
        let mask = tape.constant(mask);
        tape.mul(x, mask)
    }
}
