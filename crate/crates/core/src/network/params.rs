use crate::autodiff::{ParamId, ParamStore, Tensor};

use super::{Architecture, ModelConfig, NetworkError};

pub const WORDS: &str = "embedding.words";
pub const ASPECTS: &str = "embedding.aspects";
pub const LSTM_W_IH: &str = "lstm.w_ih";
pub const LSTM_W_HH: &str = "lstm.w_hh";
pub const LSTM_BIAS: &str = "lstm.bias";
pub const ALSC_W_H: &str = "alsc.attn.w_h";
pub const ALSC_W_U: &str = "alsc.attn.w_u";
pub const ALSC_Z: &str = "alsc.attn.z";
pub const REPR_W_ATT: &str = "alsc.repr.w_att";
pub const REPR_W_LAST: &str = "alsc.repr.w_last";
pub const ALSC_HEAD_W: &str = "alsc.head.weight";
pub const ALSC_HEAD_B: &str = "alsc.head.bias";
pub const ACD_W_H: &str = "acd.attn.w_h";
pub const ACD_W_U: &str = "acd.attn.w_u";
pub const ACD_Z: &str = "acd.attn.z";
pub const ACD_HEAD_W: &str = "acd.head.weight";
pub const ACD_HEAD_B: &str = "acd.head.bias";

/// Name and shape of every tensor a configuration uses, in creation order.
///
/// LSTM gates are fused in the order input, forget, cell, output: row block
/// `d..2d` of `lstm.bias` is the forget bias.
pub fn param_shapes(config: &ModelConfig, vocab_size: usize, n_categories: usize) -> Vec<(&'static str, Vec<usize>)> {
    let d = config.hidden;
    let input = if config.variant == Architecture::Atae { 2 * d } else { d };
    let mut shapes = vec![
        (WORDS, vec![vocab_size, d]),
        (ASPECTS, vec![n_categories, d]),
        (LSTM_W_IH, vec![4 * d, input]),
        (LSTM_W_HH, vec![4 * d, d]),
        (LSTM_BIAS, vec![4 * d]),
    ];
    if config.variant != Architecture::LstmAvg {
        shapes.extend([
            (ALSC_W_H, vec![d, d]),
            (ALSC_W_U, vec![d, d]),
            (ALSC_Z, vec![d]),
            (REPR_W_ATT, vec![d, d]),
            (REPR_W_LAST, vec![d, d]),
        ]);
    }
    shapes.extend([(ALSC_HEAD_W, vec![config.classes, d]), (ALSC_HEAD_B, vec![config.classes])]);
    if config.multi_task {
        shapes.extend([
            (ACD_W_H, vec![d, d]),
            (ACD_W_U, vec![d, d]),
            (ACD_Z, vec![d]),
            (ACD_HEAD_W, vec![1, d]),
            (ACD_HEAD_B, vec![1]),
        ]);
    }
    shapes
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct AttnIds {
    pub w_h: ParamId,
    pub w_u: ParamId,
    pub z: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Ids {
    pub words: ParamId,
    pub aspects: ParamId,
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub alsc: Option<AttnIds>,
    pub repr: Option<(ParamId, ParamId)>,
    pub alsc_head: (ParamId, ParamId),
    pub acd: Option<AttnIds>,
    pub acd_head: Option<(ParamId, ParamId)>,
}

/// All tensors of one model together with its configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    store: ParamStore,
    ids: Ids,
    vocab_size: usize,
    n_categories: usize,
}

impl ModelParams {
    /// Every tensor zero-filled.
    pub fn zeros(config: ModelConfig, vocab_size: usize, n_categories: usize) -> Result<Self, NetworkError> {
        let mut store = ParamStore::new();
        for (name, shape) in param_shapes(&config, vocab_size, n_categories) {
            store.insert(name, Tensor::zeros(&shape), true)?;
        }
        Self::from_store(config, store)
    }

    /// Adopts a store, checking that it holds exactly the tensors `config` needs.
    pub fn from_store(config: ModelConfig, store: ParamStore) -> Result<Self, NetworkError> {
        config.validate()?;
        let words = store.id(WORDS).ok_or_else(|| NetworkError::Params(format!("missing `{WORDS}`")))?;
        let aspects = store.id(ASPECTS).ok_or_else(|| NetworkError::Params(format!("missing `{ASPECTS}`")))?;
        let vocab_size = store.value(words).shape()[0];
        let n_categories = store.value(aspects).shape()[0];
        let expected = param_shapes(&config, vocab_size, n_categories);
        if store.len() != expected.len() {
            return Err(NetworkError::Params(format!(
                "expected {} tensors for {config}, found {}",
                expected.len(),
                store.len()
            )));
        }
        for (name, shape) in &expected {
            let id = store.id(name).ok_or_else(|| NetworkError::Params(format!("missing `{name}`")))?;
            if store.value(id).shape() != shape.as_slice() {
                return Err(NetworkError::Params(format!(
                    "`{name}` has shape {:?}, expected {shape:?}",
                    store.value(id).shape()
                )));
            }
        }
        let id = |n: &str| store.id(n).expect("checked above");
        let attn = |h: &str, u: &str, z: &str| AttnIds { w_h: id(h), w_u: id(u), z: id(z) };
        let has_attn = config.variant != Architecture::LstmAvg;
        let ids = Ids {
            words,
            aspects,
            w_ih: id(LSTM_W_IH),
            w_hh: id(LSTM_W_HH),
            bias: id(LSTM_BIAS),
            alsc: has_attn.then(|| attn(ALSC_W_H, ALSC_W_U, ALSC_Z)),
            repr: has_attn.then(|| (id(REPR_W_ATT), id(REPR_W_LAST))),
            alsc_head: (id(ALSC_HEAD_W), id(ALSC_HEAD_B)),
            acd: config.multi_task.then(|| attn(ACD_W_H, ACD_W_U, ACD_Z)),
            acd_head: config.multi_task.then(|| (id(ACD_HEAD_W), id(ACD_HEAD_B))),
        };
        Ok(Self { config, store, ids, vocab_size, n_categories })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn into_store(self) -> ParamStore {
        self.store
    }

    pub(crate) fn ids(&self) -> &Ids {
        &self.ids
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.store.id(name).map(|id| self.store.value(id))
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let id = self.store.id(name)?;
        Some(&mut self.store.get_mut(id).value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_configuration() {
        let at = ModelConfig::named("AT-LSTM", 3, 5).unwrap();
        let p = ModelParams::zeros(at, 11, 4).unwrap();
        assert_eq!(p.tensor(WORDS).unwrap().shape(), &[11, 5]);
        assert_eq!(p.tensor(LSTM_W_IH).unwrap().shape(), &[20, 5]);
        assert_eq!(p.tensor(ALSC_HEAD_W).unwrap().shape(), &[3, 5]);
        assert!(p.tensor(ACD_Z).is_none());

        let atae = ModelConfig::named("ATAE-LSTM", 2, 5).unwrap();
        let p = ModelParams::zeros(atae, 11, 4).unwrap();
        assert_eq!(p.tensor(LSTM_W_IH).unwrap().shape(), &[20, 10]);

        let lstm = ModelConfig::named("LSTM", 3, 5).unwrap();
        let p = ModelParams::zeros(lstm, 11, 4).unwrap();
        assert!(p.tensor(ALSC_W_H).is_none() && p.tensor(REPR_W_ATT).is_none());

        let multi = ModelConfig::named("M-AT-LSTM", 3, 5).unwrap();
        let p = ModelParams::zeros(multi, 11, 4).unwrap();
        assert_eq!(p.tensor(ACD_HEAD_W).unwrap().shape(), &[1, 5]);
        assert_eq!(p.store().len(), 17);
    }

    #[test]
    fn from_store_rejects_mismatches() {
        let at = ModelConfig::named("AT-LSTM", 3, 5).unwrap();
        let multi = ModelConfig::named("M-AT-LSTM", 3, 5).unwrap();
        let store = ModelParams::zeros(at.clone(), 11, 4).unwrap().into_store();
        assert!(ModelParams::from_store(multi, store.clone()).is_err());
        let mut bad = ParamStore::new();
        for (name, shape) in param_shapes(&at, 11, 4) {
            let shape = if name == ALSC_Z { vec![6] } else { shape };
            bad.insert(name, Tensor::zeros(&shape), true).unwrap();
        }
        let err = ModelParams::from_store(at.clone(), bad).unwrap_err().to_string();
        assert!(err.contains(ALSC_Z), "{err}");
        assert!(ModelParams::from_store(at, store).is_ok());
    }
}
