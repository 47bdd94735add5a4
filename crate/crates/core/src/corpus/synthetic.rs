use rand::seq::SliceRandom;
use rand::Rng;

use super::{tokenize, AspectMention, CategoryInventory, Instance, Overlap, Polarity, Sentence};
use crate::seed::rng_for;

const CATEGORY_POOL: [(&str, [&str; 2]); 8] = [
    ("food", ["food", "pizza"]),
    ("service", ["service", "waiter"]),
    ("price", ["price", "bill"]),
    ("ambience", ["ambience", "decor"]),
    ("drinks", ["drinks", "wine"]),
    ("location", ["location", "view"]),
    ("staff", ["staff", "manager"]),
    ("menu", ["menu", "dessert"]),
];

const POSITIVE: [&str; 4] = ["good", "great", "excellent", "lovely"];
const NEGATIVE: [&str; 4] = ["bad", "awful", "terrible", "poor"];
const NEUTRAL: [&str; 2] = ["okay", "average"];

/// Parameters of the template generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_sentences: usize,
    pub n_categories: usize,
    /// size of the pool of filler words sprinkled into sentences
    pub vocab_size: usize,
    pub seed: u64,
    /// 2 draws from {positive, negative}; 3 adds neutral
    pub n_polarities: usize,
    /// probability that a sentence carries two aspects
    pub multi_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n_sentences: 60, n_categories: 4, vocab_size: 8, seed: 0, n_polarities: 2, multi_fraction: 0.5 }
    }
}

/// Generates template sentences such as `the food was good and the waiter
/// was bad`, where each aspect's polarity is fixed by its own opinion word.
/// Two-aspect sentences are non-overlapping by construction.
pub fn make_synthetic_corpus(spec: &SyntheticSpec) -> (Vec<Instance>, CategoryInventory) {
    assert!(spec.n_categories >= 2, "synthetic corpus needs at least two categories");
    assert!(matches!(spec.n_polarities, 2 | 3), "n_polarities must be 2 or 3");

    let categories: Vec<(String, [String; 2])> = (0..spec.n_categories)
        .map(|i| match CATEGORY_POOL.get(i) {
            Some((name, terms)) => (name.to_string(), terms.map(str::to_string)),
            None => (format!("cat{i}"), [format!("cat{i}a"), format!("cat{i}b")]),
        })
        .collect();
    let fillers: Vec<String> = (0..spec.vocab_size).map(|i| format!("w{i}")).collect();
    let polarities = &Polarity::ALL[..];

    let mut rng = rng_for(spec.seed, &[0x5e_17]);
    let mut instances = Vec::with_capacity(spec.n_sentences);
    for s in 0..spec.n_sentences {
        let k = if rng.gen_bool(spec.multi_fraction.clamp(0.0, 1.0)) { 2 } else { 1 };
        let mut cats: Vec<usize> = (0..categories.len()).collect();
        cats.shuffle(&mut rng);
        cats.truncate(k);

        let mut words: Vec<String> = Vec::new();
        let mut mentions = Vec::with_capacity(k);
        for (j, &c) in cats.iter().enumerate() {
            let polarity = if spec.n_polarities == 2 {
                if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative }
            } else {
                *polarities.choose(&mut rng).expect("three polarities")
            };
            if j > 0 {
                words.push("and".into());
            }
            push_filler(&mut words, &fillers, &mut rng);
            words.push("the".into());
            words.push(categories[c].1[rng.gen_range(0..2)].clone());
            words.push("was".into());
            push_filler(&mut words, &fillers, &mut rng);
            let pool: &[&str] = match polarity {
                Polarity::Positive => &POSITIVE,
                Polarity::Negative => &NEGATIVE,
                Polarity::Neutral => &NEUTRAL,
            };
            words.push(pool.choose(&mut rng).expect("nonempty pool").to_string());
            mentions.push(AspectMention { category: categories[c].0.clone(), polarity });
        }
        let text = words.join(" ");
        let overlap = if k >= 2 { Overlap::NonOverlapping } else { Overlap::Single };
        instances.push(Instance {
            sentence: Sentence { id: format!("syn-{}-{s}", spec.seed), tokens: tokenize(&text), raw_text: text },
            mentions,
            overlap,
        });
    }
    let inventory = CategoryInventory::new(categories.into_iter().map(|(name, _)| name).collect());
    (instances, inventory)
}

fn push_filler<R: Rng>(words: &mut Vec<String>, fillers: &[String], rng: &mut R) {
    if !fillers.is_empty() && rng.gen_bool(0.5) {
        words.push(fillers[rng.gen_range(0..fillers.len())].clone());
    }
}
