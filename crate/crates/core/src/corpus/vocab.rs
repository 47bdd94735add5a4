use std::collections::HashMap;

use super::{CorpusError, Instance};

/// Token reserved at index 0 for unknown words and padding.
pub const UNK: &str = "<unk>";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from words in index order; `words[0]` must be [`UNK`].
    pub fn from_words(words: Vec<String>) -> Result<Self, CorpusError> {
        if words.first().map(String::as_str) != Some(UNK) {
            return Err(CorpusError::Empty("vocabulary must start with <unk>"));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(CorpusError::InvalidInstance { id: w.clone(), message: "duplicate vocabulary word".into() });
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 1
    }

    /// Index of `word`, 0 when out of vocabulary.
    pub fn lookup(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.get(word).is_some_and(|&i| i != 0)
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn to_text(&self) -> String {
        let mut s = self.words.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        Self::from_words(text.lines().map(str::to_string).collect())
    }
}

/// Indexes every training token, most frequent first, ties alphabetical.
pub fn build_vocab(train: &[Instance]) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for inst in train {
        for t in &inst.sentence.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(w, _)| *w != UNK).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let words = std::iter::once(UNK.to_string()).chain(ranked.into_iter().map(|(w, _)| w.to_string())).collect();
    Vocabulary::from_words(words).expect("ranked words are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, AspectMention, Polarity, Sentence};

    fn inst(id: &str, text: &str) -> Instance {
        Instance::new(
            Sentence { id: id.into(), tokens: tokenize(text), raw_text: text.into() },
            vec![AspectMention { category: "food".into(), polarity: Polarity::Positive }],
        )
        .unwrap()
    }

    #[test]
    fn indexes_training_tokens_with_unk_first() {
        let v = build_vocab(&[inst("1", "good food"), inst("2", "good service")]);
        assert_eq!(v.words(), &["<unk>", "good", "food", "service"]);
        assert_eq!(v.lookup("service"), 3);
        assert_eq!(v.lookup("pasta"), 0);
        assert!(!v.contains("pasta"));
    }

    #[test]
    fn order_is_stable_and_text_round_trips() {
        let data = [inst("1", "b a c a"), inst("2", "c b d")];
        let v1 = build_vocab(&data);
        let v2 = build_vocab(&data);
        assert_eq!(v1, v2);
        assert_eq!(Vocabulary::from_text(&v1.to_text()).unwrap(), v1);
    }
}
