use rand::seq::SliceRandom;

use super::{CategoryInventory, CorpusError, EvalMode, Instance, Overlap, Vocabulary};
use crate::seed::rng_for;

/// Deterministic shuffled split at sentence granularity.
///
/// With ratio `a:b` the validation side receives `floor(n * b / (a + b))`
/// sentences. Both sides keep the input order.
pub fn split_train_val(
    instances: &[Instance],
    ratio: (usize, usize),
    seed: u64,
) -> Result<(Vec<Instance>, Vec<Instance>), CorpusError> {
    if instances.is_empty() {
        return Err(CorpusError::Empty("cannot split an empty corpus"));
    }
    let (a, b) = ratio;
    assert!(a + b > 0, "split ratio must not be 0:0");
    let n = instances.len();
    let n_val = n * b / (a + b);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[0x5711]));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (inst, v) in instances.iter().zip(is_val) {
        if v { val.push(inst.clone()) } else { train.push(inst.clone()) }
    }
    Ok((train, val))
}

/// An aspect mention as indices: category in the inventory, class under the
/// evaluation mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Aspect {
    pub category: usize,
    pub label: usize,
}

/// A sentence mapped onto vocabulary and label indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedInstance {
    pub id: String,
    pub token_ids: Vec<usize>,
    pub aspects: Vec<Aspect>,
    pub overlap: Overlap,
}

/// Maps instances to indices under `mode`. In binary mode neutral mentions
/// are dropped, and sentences without remaining mentions with them.
pub fn encode(
    instances: &[Instance],
    vocab: &Vocabulary,
    inventory: &CategoryInventory,
    mode: EvalMode,
) -> Result<Vec<EncodedInstance>, CorpusError> {
    let mut out = Vec::with_capacity(instances.len());
    for inst in instances {
        let Some(inst) = inst.filter_for_mode(mode) else { continue };
        let mut aspects = Vec::with_capacity(inst.mentions.len());
        for m in &inst.mentions {
            let category = inventory.index_of(&m.category).ok_or_else(|| CorpusError::UnknownCategory {
                sentence: inst.id().to_string(),
                category: m.category.clone(),
            })?;
            let label = m.polarity.class_index(mode).expect("filtered to the mode's classes");
            aspects.push(Aspect { category, label });
        }
        out.push(EncodedInstance {
            id: inst.sentence.id.clone(),
            token_ids: inst.sentence.tokens.iter().map(|t| vocab.lookup(t)).collect(),
            aspects,
            overlap: inst.overlap,
        });
    }
    Ok(out)
}

/// Padded mini-batch. `members` index into the encoded instance list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub members: Vec<usize>,
    pub token_ids: Vec<Vec<usize>>,
    pub lengths: Vec<usize>,
    /// `true` on real tokens, `false` on padding
    pub mask: Vec<Vec<bool>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.token_ids.first().map_or(0, Vec::len)
    }
}

/// Shuffles with a stream derived from `(seed, epoch)` and cuts into
/// batches padded with index 0 to the longest member.
pub fn batches(instances: &[EncodedInstance], batch_size: usize, seed: u64, epoch: u64) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.shuffle(&mut rng_for(seed, &[0xba7c, epoch]));
    order
        .chunks(batch_size)
        .map(|chunk| {
            let max_len = chunk.iter().map(|&i| instances[i].token_ids.len()).max().unwrap_or(0);
            let mut token_ids = Vec::with_capacity(chunk.len());
            let mut lengths = Vec::with_capacity(chunk.len());
            let mut mask = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let ids = &instances[i].token_ids;
                let mut row = ids.clone();
                row.resize(max_len, 0);
                token_ids.push(row);
                lengths.push(ids.len());
                mask.push((0..max_len).map(|p| p < ids.len()).collect());
            }
            Batch { members: chunk.to_vec(), token_ids, lengths, mask }
        })
        .collect()
}
