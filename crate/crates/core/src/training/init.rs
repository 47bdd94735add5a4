use rand::Rng;

use crate::autodiff::Tensor;
use crate::network::{ModelConfig, ModelParams, LSTM_BIAS, WORDS};
use crate::seed::rng_for;

use super::TrainError;

/// Fresh parameters for `config`.
///
/// Every tensor is drawn from `U(−init_range, init_range)` in creation
/// order, except the LSTM bias (zero, with the forget block at 1.0) and the
/// word embeddings when `pretrained` is given.
pub fn init_params(
    config: &ModelConfig,
    vocab_size: usize,
    n_categories: usize,
    init_range: f64,
    seed: u64,
    pretrained: Option<&Tensor>,
) -> Result<ModelParams, TrainError> {
    let mut model = ModelParams::zeros(config.clone(), vocab_size, n_categories)?;
    let mut rng = rng_for(seed, &[0x1417]);
    let d = config.hidden;
    for p in model.store_mut().iter_mut() {
        if p.name == LSTM_BIAS {
            for (i, v) in p.value.data_mut().iter_mut().enumerate() {
                *v = if (d..2 * d).contains(&i) { 1.0 } else { 0.0 };
            }
            continue;
        }
        if p.name == WORDS {
            if let Some(table) = pretrained {
                if table.shape() != p.value.shape() {
                    return Err(TrainError::Config(format!(
                        "pretrained embeddings have shape {:?}, model expects {:?}",
                        table.shape(),
                        p.value.shape()
                    )));
                }
                p.value = table.clone();
                continue;
            }
        }
        for v in p.value.data_mut() {
            *v = rng.gen_range(-init_range..=init_range);
        }
    }
    Ok(model)
}
