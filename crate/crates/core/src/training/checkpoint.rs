use std::collections::BTreeMap;

use crate::corpus::{CategoryInventory, EvalMode, Vocabulary};
use crate::network::{ModelConfig, ModelParams, ParamFile};

use super::{TrainConfig, TrainError};

/// Best parameters of a run with everything needed to reuse them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    /// validation accuracy, detection F1 and macro-F1 at `epoch`
    pub metric: [f64; 3],
    pub params: ModelParams,
    pub train_config: TrainConfig,
    /// identifies the random stream position the parameters were taken at
    pub fingerprint: u64,
    pub mode: EvalMode,
    pub vocab: Vocabulary,
    pub categories: CategoryInventory,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut meta = vec![
            ("epoch".to_string(), self.epoch.to_string()),
            ("metric.val_acc".into(), format!("{:?}", self.metric[0])),
            ("metric.acd_f1".into(), format!("{:?}", self.metric[1])),
            ("metric.val_f1".into(), format!("{:?}", self.metric[2])),
            ("fingerprint".into(), format!("{:016x}", self.fingerprint)),
            ("mode".into(), self.mode.as_str().to_string()),
            ("variant_name".into(), self.params.config().variant_name().unwrap_or("custom").to_string()),
        ];
        meta.extend(self.params.config().to_pairs("model."));
        meta.extend(self.train_config.to_pairs("train."));
        ParamFile {
            meta,
            lists: vec![
                ("vocab".into(), self.vocab.words().to_vec()),
                ("categories".into(), self.categories.labels().to_vec()),
            ],
            store: self.params.store().clone(),
        }
        .to_text()
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self, TrainError> {
        let file = ParamFile::from_text(text, source)?;
        let map: BTreeMap<&str, &str> = file.meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let get = |k: &str| map.get(k).map(|v| v.to_string());
        let bad = |m: String| TrainError::Config(format!("{source}: {m}"));
        let field = |k: &str| get(k).ok_or_else(|| bad(format!("missing `{k}`")));
        let float = |k: &str| -> Result<f64, TrainError> {
            let v = field(k)?;
            v.parse().map_err(|_| bad(format!("invalid `{k}` value `{v}`")))
        };
        let model_config = ModelConfig::from_pairs(get, "model.")?;
        let train_config = TrainConfig::from_pairs(get, "train.")?;
        let epoch = field("epoch")?;
        let fingerprint = field("fingerprint")?;
        let vocab = Vocabulary::from_words(file.list("vocab").ok_or_else(|| bad("missing vocab list".into()))?.to_vec())?;
        let categories =
            CategoryInventory::new(file.list("categories").ok_or_else(|| bad("missing categories list".into()))?.to_vec());
        let params = ModelParams::from_store(model_config, file.store)?;
        if params.vocab_size() != vocab.len() || params.n_categories() != categories.len() {
            return Err(bad("tensor shapes disagree with the stored vocabulary or categories".into()));
        }
        Ok(Self {
            epoch: epoch.parse().map_err(|_| bad(format!("invalid epoch `{epoch}`")))?,
            metric: [float("metric.val_acc")?, float("metric.acd_f1")?, float("metric.val_f1")?],
            params,
            train_config,
            fingerprint: u64::from_str_radix(&fingerprint, 16).map_err(|_| bad(format!("invalid fingerprint `{fingerprint}`")))?,
            mode: field("mode")?.parse().map_err(bad)?,
            vocab,
            categories,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::init_params;

    #[test]
    fn text_round_trip_is_exact() {
        let config = ModelConfig::named("M-CAN-2Ro", 3, 4).unwrap();
        let vocab = Vocabulary::from_words(vec!["<unk>".into(), "good".into(), "food".into()]).unwrap();
        let categories = CategoryInventory::new(vec!["food".into(), "service".into()]);
        let ck = Checkpoint {
            epoch: 7,
            metric: [0.8125, 0.7, 0.1 + 0.2],
            params: init_params(&config, 3, 2, 0.01, 3, None).unwrap(),
            train_config: TrainConfig { seed: 3, ..Default::default() },
            fingerprint: 0xdead_beef,
            mode: EvalMode::ThreeWay,
            vocab,
            categories,
        };
        let text = ck.to_text();
        let back = Checkpoint::from_text(&text, "ck").unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_text(), text);
        assert!(text.contains("variant_name = M-CAN-2Ro"));
        let broken = text.replace("model.hidden = 4", "model.hidden = 5");
        assert!(Checkpoint::from_text(&broken, "ck").is_err());
    }
}
