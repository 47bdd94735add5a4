//! Data ingestion: SemEval restaurant reviews, overlap annotations,
//! vocabulary, pretrained embeddings, synthetic corpora, splits and batches.

mod batch;
mod dump;
mod embeddings;
mod overlap;
mod semeval;
mod synthetic;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use batch::{batches, encode, split_train_val, Aspect, Batch, EncodedInstance};
pub use dump::{read_dump, write_dump};
pub use embeddings::{load_embeddings, read_embeddings, EmbeddingTable};
pub use overlap::{merge_overlap_annotations, parse_overlap_annotations, MergeReport, OverlapAnnotations};
pub use semeval::{parse_semeval14, parse_semeval15};
pub use synthetic::{make_synthetic_corpus, SyntheticSpec};
pub use vocab::{build_vocab, Vocabulary, UNK};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("sentence {sentence}: missing attribute `{attribute}`")]
    MissingAttribute { sentence: String, attribute: &'static str },
    #[error("sentence {sentence}: unknown polarity `{value}`")]
    UnknownPolarity { sentence: String, value: String },
    #[error("sentence {sentence}: unknown category `{category}`")]
    UnknownCategory { sentence: String, category: String },
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
    #[error("embedding line {line}: expected {expected} values, found {found}")]
    EmbeddingDim { line: usize, expected: usize, found: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid instance {id}: {message}")]
    InvalidInstance { id: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CorpusError {
    pub(crate) fn io(path: impl fmt::Display, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_string(), source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Neutral, Polarity::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Neutral => "neutral",
            Polarity::Negative => "negative",
        }
    }

    /// Class index under `mode`; neutral has none in binary mode.
    pub fn class_index(self, mode: EvalMode) -> Option<usize> {
        mode.classes().iter().position(|&p| p == self)
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "neutral" => Ok(Polarity::Neutral),
            "negative" => Ok(Polarity::Negative),
            other => Err(other.to_string()),
        }
    }
}

/// Label space used for sentiment classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvalMode {
    ThreeWay,
    Binary,
}

impl EvalMode {
    pub fn classes(self) -> &'static [Polarity] {
        match self {
            EvalMode::ThreeWay => &[Polarity::Positive, Polarity::Neutral, Polarity::Negative],
            EvalMode::Binary => &[Polarity::Positive, Polarity::Negative],
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::ThreeWay => "3way",
            EvalMode::Binary => "binary",
        }
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "3way" | "3-way" | "three-way" => Ok(EvalMode::ThreeWay),
            "binary" => Ok(EvalMode::Binary),
            other => Err(format!("unknown evaluation mode `{other}` (expected 3way or binary)")),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overlap {
    Overlapping,
    NonOverlapping,
    Single,
}

impl Overlap {
    pub fn as_str(self) -> &'static str {
        match self {
            Overlap::Overlapping => "overlapping",
            Overlap::NonOverlapping => "non-overlapping",
            Overlap::Single => "single",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub raw_text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectMention {
    pub category: String,
    pub polarity: Polarity,
}

/// One sentence with all of its aspect mentions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub sentence: Sentence,
    pub mentions: Vec<AspectMention>,
    pub overlap: Overlap,
}

impl Instance {
    /// Builds an instance with the provisional overlap flag: `single` for one
    /// mention, `non-overlapping` for several.
    pub fn new(sentence: Sentence, mentions: Vec<AspectMention>) -> Result<Self, CorpusError> {
        let overlap = if mentions.len() >= 2 { Overlap::NonOverlapping } else { Overlap::Single };
        let inst = Instance { sentence, mentions, overlap };
        inst.validate()?;
        Ok(inst)
    }

    pub fn id(&self) -> &str {
        &self.sentence.id
    }

    pub fn is_multi_aspect(&self) -> bool {
        self.mentions.len() >= 2
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |message: &str| CorpusError::InvalidInstance { id: self.sentence.id.clone(), message: message.into() };
        if self.sentence.tokens.is_empty() {
            return Err(bad("sentence has no tokens"));
        }
        if self.mentions.is_empty() {
            return Err(bad("no aspect mentions"));
        }
        for (i, m) in self.mentions.iter().enumerate() {
            if self.mentions[..i].iter().any(|o| o.category == m.category) {
                return Err(bad("duplicate category"));
            }
        }
        match (self.mentions.len(), self.overlap) {
            (1, Overlap::Single) => Ok(()),
            (1, _) => Err(bad("single-aspect sentence carries an overlap flag")),
            (_, Overlap::Single) => Err(bad("multi-aspect sentence without overlap flag")),
            _ => Ok(()),
        }
    }

    /// Restricts mentions to the polarities of `mode`. Returns `None` when no
    /// mention survives.
    pub fn filter_for_mode(&self, mode: EvalMode) -> Option<Instance> {
        let mentions: Vec<_> =
            self.mentions.iter().filter(|m| m.polarity.class_index(mode).is_some()).cloned().collect();
        if mentions.is_empty() {
            return None;
        }
        let overlap = if mentions.len() == 1 { Overlap::Single } else { self.overlap };
        Some(Instance { sentence: self.sentence.clone(), mentions, overlap })
    }
}

/// Ordered list of aspect category labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryInventory {
    labels: Vec<String>,
}

impl CategoryInventory {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels }
    }

    /// Distinct categories of `instances`, sorted.
    pub fn from_instances<'a>(instances: impl IntoIterator<Item = &'a Instance>) -> Self {
        let mut labels: Vec<String> =
            instances.into_iter().flat_map(|i| i.mentions.iter().map(|m| m.category.clone())).collect();
        labels.sort();
        labels.dedup();
        Self { labels }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Lowercases and splits on whitespace and punctuation. Alphanumeric runs
/// (with inner apostrophes) form words; every other visible character is a
/// token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = c == '\''
            && !word.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Counts in the layout of the dataset statistics table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitSummary {
    pub single: usize,
    pub overlapping: usize,
    pub non_overlapping: usize,
}

impl SplitSummary {
    pub fn of(instances: &[Instance]) -> Self {
        let mut s = SplitSummary::default();
        for inst in instances {
            match inst.overlap {
                Overlap::Single => s.single += 1,
                Overlap::Overlapping => s.overlapping += 1,
                Overlap::NonOverlapping => s.non_overlapping += 1,
            }
        }
        s
    }

    pub fn multi(&self) -> usize {
        self.overlapping + self.non_overlapping
    }

    pub fn total(&self) -> usize {
        self.single + self.multi()
    }
}
