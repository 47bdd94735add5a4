use std::fmt;
use std::str::FromStr;

use super::NetworkError;

/// Encoder and attention family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    /// mean of the hidden states, no aspect conditioning
    LstmAvg,
    /// aspect-conditioned attention over a shared encoding
    At,
    /// aspect embedding concatenated to every word before encoding
    Atae,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::LstmAvg => "lstm-avg",
            Architecture::At => "at",
            Architecture::Atae => "atae",
        }
    }
}

impl FromStr for Architecture {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lstm-avg" => Ok(Architecture::LstmAvg),
            "at" => Ok(Architecture::At),
            "atae" => Ok(Architecture::Atae),
            other => Err(NetworkError::Config(format!("unknown architecture `{other}` (lstm-avg, at, atae)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    None,
    /// sparse penalty on every attention row
    Rs,
    /// orthogonal penalty on non-overlapping multi-aspect sentences, sparse otherwise
    Ro,
}

impl Regularizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Regularizer::None => "none",
            Regularizer::Rs => "Rs",
            Regularizer::Ro => "Ro",
        }
    }
}

impl FromStr for Regularizer {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Regularizer::None),
            "Rs" | "rs" => Ok(Regularizer::Rs),
            "Ro" | "ro" => Ok(Regularizer::Ro),
            other => Err(NetworkError::Config(format!("unknown regularizer `{other}` (none, Rs, Ro)"))),
        }
    }
}

/// Which Gram matrix the orthogonal penalty compares against the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gram {
    /// `M·Mᵀ − I_K`, one entry per pair of attention rows
    Rows,
    /// `MᵀM − I_L`, one entry per pair of positions
    Positions,
}

impl Gram {
    pub fn as_str(self) -> &'static str {
        match self {
            Gram::Rows => "KxK",
            Gram::Positions => "LxL",
        }
    }
}

impl FromStr for Gram {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "KxK" | "kxk" => Ok(Gram::Rows),
            "LxL" | "lxl" => Ok(Gram::Positions),
            other => Err(NetworkError::Config(format!("unknown gram `{other}` (KxK, LxL)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub variant: Architecture,
    pub multi_task: bool,
    pub reg_alsc: Regularizer,
    pub reg_acd: Regularizer,
    pub lambda: f64,
    /// number of sentiment classes
    pub classes: usize,
    /// embedding and hidden size
    pub hidden: usize,
    pub gram: Gram,
}

/// Named variants and their settings: (name, architecture, multi-task, ALSC reg, ACD reg).
pub const NAMED_VARIANTS: [(&str, Architecture, bool, Regularizer, Regularizer); 12] = [
    ("LSTM", Architecture::LstmAvg, false, Regularizer::None, Regularizer::None),
    ("AT-LSTM", Architecture::At, false, Regularizer::None, Regularizer::None),
    ("ATAE-LSTM", Architecture::Atae, false, Regularizer::None, Regularizer::None),
    ("AT-CAN-Rs", Architecture::At, false, Regularizer::Rs, Regularizer::None),
    ("AT-CAN-Ro", Architecture::At, false, Regularizer::Ro, Regularizer::None),
    ("ATAE-CAN-Rs", Architecture::Atae, false, Regularizer::Rs, Regularizer::None),
    ("ATAE-CAN-Ro", Architecture::Atae, false, Regularizer::Ro, Regularizer::None),
    ("M-AT-LSTM", Architecture::At, true, Regularizer::None, Regularizer::None),
    ("M-CAN-Rs", Architecture::At, true, Regularizer::Rs, Regularizer::None),
    ("M-CAN-Ro", Architecture::At, true, Regularizer::Ro, Regularizer::None),
    ("M-CAN-2Rs", Architecture::At, true, Regularizer::Rs, Regularizer::Rs),
    ("M-CAN-2Ro", Architecture::At, true, Regularizer::Ro, Regularizer::Ro),
];

impl ModelConfig {
    /// Configuration of a named variant with `λ = 0.1` and the row Gram.
    /// `AT` and `ATAE` are accepted as short forms.
    pub fn named(name: &str, classes: usize, hidden: usize) -> Result<Self, NetworkError> {
        let canonical = match name {
            "AT" => "AT-LSTM",
            "ATAE" => "ATAE-LSTM",
            other => other,
        };
        let (_, variant, multi_task, reg_alsc, reg_acd) = NAMED_VARIANTS
            .iter()
            .find(|v| v.0 == canonical)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = NAMED_VARIANTS.iter().map(|v| v.0).collect();
                NetworkError::Config(format!("unknown variant `{name}`; expected one of {} or custom", names.join(", ")))
            })?;
        let config = Self { variant, multi_task, reg_alsc, reg_acd, lambda: 0.1, classes, hidden, gram: Gram::Rows };
        config.validate()?;
        Ok(config)
    }

    /// The named variant this configuration corresponds to, if any.
    pub fn variant_name(&self) -> Option<&'static str> {
        NAMED_VARIANTS
            .iter()
            .find(|v| (v.1, v.2, v.3, v.4) == (self.variant, self.multi_task, self.reg_alsc, self.reg_acd))
            .map(|v| v.0)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.reg_acd != Regularizer::None && !self.multi_task {
            return Err(NetworkError::Config("an ACD regularizer requires multi-task training".into()));
        }
        if self.variant == Architecture::Atae && self.multi_task {
            return Err(NetworkError::Config(
                "ATAE re-encodes the sentence per aspect and cannot share an encoding with category detection; \
                 multi-task training is not available for atae"
                    .into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(NetworkError::Config(format!("lambda must be finite and nonnegative, got {}", self.lambda)));
        }
        if !matches!(self.classes, 2 | 3) {
            return Err(NetworkError::Config(format!("class count must be 2 or 3, got {}", self.classes)));
        }
        if self.hidden == 0 {
            return Err(NetworkError::Config("hidden size must be positive".into()));
        }
        Ok(())
    }

    /// Serialises to `key = value` pairs under `prefix`.
    pub fn to_pairs(&self, prefix: &str) -> Vec<(String, String)> {
        [
            ("variant", self.variant.as_str().to_string()),
            ("multi_task", self.multi_task.to_string()),
            ("reg_alsc", self.reg_alsc.as_str().to_string()),
            ("reg_acd", self.reg_acd.as_str().to_string()),
            ("lambda", format!("{:?}", self.lambda)),
            ("classes", self.classes.to_string()),
            ("hidden", self.hidden.to_string()),
            ("gram", self.gram.as_str().to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (format!("{prefix}{k}"), v))
        .collect()
    }

    pub fn from_pairs(get: impl Fn(&str) -> Option<String>, prefix: &str) -> Result<Self, NetworkError> {
        let field = |k: &str| {
            get(&format!("{prefix}{k}")).ok_or_else(|| NetworkError::Config(format!("missing `{prefix}{k}`")))
        };
        let parse_err = |k: &str, v: &str| NetworkError::Config(format!("invalid `{prefix}{k}` value `{v}`"));
        let num = |k: &str| -> Result<usize, NetworkError> {
            let v = field(k)?;
            v.parse().map_err(|_| parse_err(k, &v))
        };
        let multi = field("multi_task")?;
        let lambda = field("lambda")?;
        let config = Self {
            variant: field("variant")?.parse()?,
            multi_task: multi.parse().map_err(|_| parse_err("multi_task", &multi))?,
            reg_alsc: field("reg_alsc")?.parse()?,
            reg_acd: field("reg_acd")?.parse()?,
            lambda: lambda.parse().map_err(|_| parse_err("lambda", &lambda))?,
            classes: num("classes")?,
            hidden: num("hidden")?,
            gram: field("gram")?.parse()?,
        };
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (variant={} multi_task={} reg_alsc={} reg_acd={} lambda={} gram={} c={} d={})",
            self.variant_name().unwrap_or("custom"),
            self.variant.as_str(),
            self.multi_task,
            self.reg_alsc.as_str(),
            self.reg_acd.as_str(),
            self.lambda,
            self.gram.as_str(),
            self.classes,
            self.hidden
        )
    }
}
