use super::TrainError;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// drop probability after the embedding and the encoder
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// half-width of the uniform initialisation interval
    pub init_range: f64,
    pub adagrad_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 25,
            dropout: 0.7,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            init_range: 0.01,
            adagrad_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch size, epochs and patience must be positive".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!("patience {} exceeds max epochs {}", self.patience, self.max_epochs));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.init_range > 0.0 && self.adagrad_eps > 0.0) {
            return bad("init range and adagrad epsilon must be positive".into());
        }
        Ok(())
    }

    pub fn to_pairs(&self, prefix: &str) -> Vec<(String, String)> {
        [
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("batch_size", self.batch_size.to_string()),
            ("dropout", format!("{:?}", self.dropout)),
            ("max_epochs", self.max_epochs.to_string()),
            ("patience", self.patience.to_string()),
            ("seed", self.seed.to_string()),
            ("init_range", format!("{:?}", self.init_range)),
            ("adagrad_eps", format!("{:?}", self.adagrad_eps)),
        ]
        .into_iter()
        .map(|(k, v)| (format!("{prefix}{k}"), v))
        .collect()
    }

    pub fn from_pairs(get: impl Fn(&str) -> Option<String>, prefix: &str) -> Result<Self, TrainError> {
        fn parse<T: std::str::FromStr>(get: &dyn Fn(&str) -> Option<String>, key: String) -> Result<T, TrainError> {
            let v = get(&key).ok_or_else(|| TrainError::Config(format!("missing `{key}`")))?;
            v.parse().map_err(|_| TrainError::Config(format!("invalid `{key}` value `{v}`")))
        }
        let k = |name: &str| format!("{prefix}{name}");
        let config = Self {
            learning_rate: parse(&get, k("learning_rate"))?,
            batch_size: parse(&get, k("batch_size"))?,
            dropout: parse(&get, k("dropout"))?,
            max_epochs: parse(&get, k("max_epochs"))?,
            patience: parse(&get, k("patience"))?,
            seed: parse(&get, k("seed"))?,
            init_range: parse(&get, k("init_range"))?,
            adagrad_eps: parse(&get, k("adagrad_eps"))?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = TrainConfig { seed: 42, ..Default::default() };
        c.validate().unwrap();
        let map: BTreeMap<String, String> = c.to_pairs("train.").into_iter().collect();
        assert_eq!(TrainConfig::from_pairs(|k| map.get(k).cloned(), "train.").unwrap(), c);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for c in [
            TrainConfig { patience: 200, ..Default::default() },
            TrainConfig { dropout: 1.0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
