use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::EvalMode;
use crate::network::{Architecture, Gram, ModelConfig, Regularizer};
use crate::training::TrainConfig;

use super::CliError;

/// Environment variable holding the default data root.
pub const DATA_ROOT_VAR: &str = "CAN_DATA_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dataset {
    Rest14,
    Rest15,
    Synthetic,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Rest14 => "rest14",
            Dataset::Rest15 => "rest15",
            Dataset::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rest14" => Ok(Dataset::Rest14),
            "rest15" => Ok(Dataset::Rest15),
            "synthetic" => Ok(Dataset::Synthetic),
            other => Err(format!("unknown dataset `{other}` (expected rest14, rest15 or synthetic)")),
        }
    }
}

/// Everything a command needs: model, optimisation, data and output
/// settings. Config files and flags share the same `key = value` names.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub variant: String,
    /// allow combinations that are not one of the named variants
    pub custom: bool,
    pub multi_task: Option<bool>,
    pub architecture: Option<Architecture>,
    pub reg_alsc: Option<Regularizer>,
    pub reg_acd: Option<Regularizer>,
    pub lambda: f64,
    pub gram: Gram,
    pub hidden: usize,
    pub dataset: Dataset,
    pub mode: EvalMode,
    pub data_root: PathBuf,
    pub train_xml: Option<PathBuf>,
    pub test_xml: Option<PathBuf>,
    pub overlap_annotations: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// directory written by `prepare`; replaces the raw sources when set
    pub prepared: Option<PathBuf>,
    pub out: PathBuf,
    pub train: TrainConfig,
    pub split_seed: u64,
    pub synthetic_sentences: usize,
    pub synthetic_test: usize,
    pub synthetic_categories: usize,
    pub synthetic_polarities: usize,
    pub synthetic_seed: u64,
}

/// Recognised keys in file order.
pub const KEYS: [&str; 31] = [
    "variant",
    "custom",
    "multi-task",
    "architecture",
    "reg-alsc",
    "reg-acd",
    "lambda",
    "gram",
    "hidden",
    "dataset",
    "mode",
    "data-root",
    "train-xml",
    "test-xml",
    "overlap-annotations",
    "embeddings",
    "prepared",
    "out",
    "seed",
    "epochs",
    "learning-rate",
    "batch-size",
    "dropout",
    "patience",
    "init-range",
    "split-seed",
    "synthetic-sentences",
    "synthetic-test",
    "synthetic-categories",
    "synthetic-polarities",
    "synthetic-seed",
];

impl Default for RunConfig {
    fn default() -> Self {
        Self::with_data_root(None)
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_with<T, E: fmt::Display>(key: &str, value: &str, f: impl FnOnce(&str) -> Result<T, E>) -> Result<T, CliError> {
    f(value).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl RunConfig {
    /// Defaults, with the data root taken from `data_root` (normally the
    /// value of [`DATA_ROOT_VAR`]) or `data`.
    pub fn with_data_root(data_root: Option<String>) -> Self {
        Self {
            variant: "M-CAN-2Ro".into(),
            custom: false,
            multi_task: None,
            architecture: None,
            reg_alsc: None,
            reg_acd: None,
            lambda: 0.1,
            gram: Gram::Rows,
            hidden: 300,
            dataset: Dataset::Rest14,
            mode: EvalMode::ThreeWay,
            data_root: PathBuf::from(data_root.filter(|r| !r.is_empty()).unwrap_or_else(|| "data".into())),
            train_xml: None,
            test_xml: None,
            overlap_annotations: None,
            embeddings: None,
            prepared: None,
            out: PathBuf::from("runs/latest"),
            train: TrainConfig::default(),
            split_seed: 0,
            synthetic_sentences: 60,
            synthetic_test: 20,
            synthetic_categories: 4,
            synthetic_polarities: 2,
            synthetic_seed: 0,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "variant" => self.variant = value.to_string(),
            "custom" => self.custom = parse_bool(key, value)?,
            "multi-task" => self.multi_task = Some(parse_bool(key, value)?),
            "architecture" => self.architecture = Some(parse_with(key, value, str::parse)?),
            "reg-alsc" => self.reg_alsc = Some(parse_with(key, value, str::parse)?),
            "reg-acd" => self.reg_acd = Some(parse_with(key, value, str::parse)?),
            "lambda" => self.lambda = parse(key, value)?,
            "gram" => self.gram = parse_with(key, value, str::parse)?,
            "hidden" => self.hidden = parse(key, value)?,
            "dataset" => self.dataset = parse_with(key, value, str::parse)?,
            "mode" => self.mode = parse_with(key, value, str::parse)?,
            "data-root" => self.data_root = PathBuf::from(value),
            "train-xml" => self.train_xml = optional_path(value),
            "test-xml" => self.test_xml = optional_path(value),
            "overlap-annotations" => self.overlap_annotations = optional_path(value),
            "embeddings" => self.embeddings = optional_path(value),
            "prepared" => self.prepared = optional_path(value),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.train.seed = parse(key, value)?,
            "epochs" => self.train.max_epochs = parse(key, value)?,
            "learning-rate" => self.train.learning_rate = parse(key, value)?,
            "batch-size" => self.train.batch_size = parse(key, value)?,
            "dropout" => self.train.dropout = parse(key, value)?,
            "patience" => self.train.patience = parse(key, value)?,
            "init-range" => self.train.init_range = parse(key, value)?,
            "split-seed" => self.split_seed = parse(key, value)?,
            "synthetic-sentences" => self.synthetic_sentences = parse(key, value)?,
            "synthetic-test" => self.synthetic_test = parse(key, value)?,
            "synthetic-categories" => self.synthetic_categories = parse(key, value)?,
            "synthetic-polarities" => self.synthetic_polarities = parse(key, value)?,
            "synthetic-seed" => self.synthetic_seed = parse(key, value)?,
            other => return Err(CliError::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{source}:{}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("{source}:{}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_pairs<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, String)>) -> Result<(), CliError> {
        for (k, v) in pairs {
            self.set(k, &v)?;
        }
        Ok(())
    }

    /// Resolves the variant name and overrides into a validated model
    /// configuration with `classes` output classes.
    pub fn model_config(&self, classes: usize) -> Result<ModelConfig, CliError> {
        let mut config = match ModelConfig::named(&self.variant, classes, self.hidden) {
            Ok(c) => c,
            Err(_) if self.custom && self.variant == "custom" => ModelConfig::named("AT-LSTM", classes, self.hidden)?,
            Err(e) => return Err(e.into()),
        };
        if let Some(m) = self.multi_task {
            config.multi_task = m;
        }
        if let Some(a) = self.architecture {
            config.variant = a;
        }
        if let Some(r) = self.reg_alsc {
            config.reg_alsc = r;
        }
        if let Some(r) = self.reg_acd {
            config.reg_acd = r;
        }
        config.lambda = self.lambda;
        config.gram = self.gram;
        config.validate()?;
        if !self.custom && config.variant_name().is_none() {
            return Err(CliError::Config(format!(
                "{} with multi-task={}, reg-alsc={}, reg-acd={} is not a named variant; pass --custom to run it anyway",
                config.variant.as_str(),
                config.multi_task,
                config.reg_alsc.as_str(),
                config.reg_acd.as_str()
            )));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model_config(self.mode.num_classes())?;
        self.train.validate()?;
        if self.dataset == Dataset::Synthetic {
            if self.synthetic_categories < 2 || !matches!(self.synthetic_polarities, 2 | 3) {
                return Err(CliError::Config("synthetic data needs at least 2 categories and 2 or 3 polarities".into()));
            }
            if self.synthetic_sentences < 2 || self.synthetic_test == 0 {
                return Err(CliError::Config("synthetic data needs at least 2 training and 1 test sentence".into()));
            }
        }
        Ok(())
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.data_root.join(self.dataset.as_str())
    }

    pub fn train_xml_path(&self) -> PathBuf {
        self.train_xml.clone().unwrap_or_else(|| self.dataset_dir().join("train.xml"))
    }

    pub fn test_xml_path(&self) -> PathBuf {
        self.test_xml.clone().unwrap_or_else(|| self.dataset_dir().join("test.xml"))
    }

    /// Explicit sidecar path, else `overlap.tsv` in the dataset directory if present.
    pub fn overlap_path(&self) -> Option<PathBuf> {
        self.overlap_annotations.clone().or_else(|| {
            let p = self.dataset_dir().join("overlap.tsv");
            p.is_file().then_some(p)
        })
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut pairs = vec![
            ("variant", Some(self.variant.clone())),
            ("custom", Some(self.custom.to_string())),
            ("multi-task", self.multi_task.map(|m| m.to_string())),
            ("architecture", self.architecture.map(|a| a.as_str().to_string())),
            ("reg-alsc", self.reg_alsc.map(|r| r.as_str().to_string())),
            ("reg-acd", self.reg_acd.map(|r| r.as_str().to_string())),
            ("lambda", Some(format!("{:?}", self.lambda))),
            ("gram", Some(self.gram.as_str().to_string())),
            ("hidden", Some(self.hidden.to_string())),
            ("dataset", Some(self.dataset.as_str().to_string())),
            ("mode", Some(self.mode.as_str().to_string())),
            ("data-root", Some(self.data_root.display().to_string())),
            ("train-xml", path(&self.train_xml)),
            ("test-xml", path(&self.test_xml)),
            ("overlap-annotations", path(&self.overlap_annotations)),
            ("embeddings", path(&self.embeddings)),
            ("prepared", path(&self.prepared)),
            ("out", Some(self.out.display().to_string())),
            ("seed", Some(self.train.seed.to_string())),
            ("epochs", Some(self.train.max_epochs.to_string())),
            ("learning-rate", Some(format!("{:?}", self.train.learning_rate))),
            ("batch-size", Some(self.train.batch_size.to_string())),
            ("dropout", Some(format!("{:?}", self.train.dropout))),
            ("patience", Some(self.train.patience.to_string())),
            ("init-range", Some(format!("{:?}", self.train.init_range))),
            ("split-seed", Some(self.split_seed.to_string())),
        ];
        if self.dataset == Dataset::Synthetic {
            pairs.extend([
                ("synthetic-sentences", Some(self.synthetic_sentences.to_string())),
                ("synthetic-test", Some(self.synthetic_test.to_string())),
                ("synthetic-categories", Some(self.synthetic_categories.to_string())),
                ("synthetic-polarities", Some(self.synthetic_polarities.to_string())),
                ("synthetic-seed", Some(self.synthetic_seed.to_string())),
            ]);
        }
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
    }

    /// The configuration as a file that [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
