use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;

use super::{CorpusError, Vocabulary};
use crate::autodiff::Tensor;

/// Word vectors aligned with a [`Vocabulary`].
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub matrix: Tensor,
    pub dim: usize,
    /// vocabulary words (excluding `<unk>`) found in the file
    pub found: usize,
}

impl EmbeddingTable {
    /// Fraction of non-`<unk>` vocabulary words covered by the file.
    pub fn coverage(&self) -> f64 {
        let total = self.matrix.shape()[0].saturating_sub(1);
        if total == 0 {
            0.0
        } else {
            self.found as f64 / total as f64
        }
    }
}

/// Loads `word v1 … v_d` lines for the words of `vocab`. Words missing from
/// the file get rows drawn from `U(-init_range, init_range)`.
pub fn load_embeddings<R: Rng>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    init_range: f64,
    rng: &mut R,
) -> Result<EmbeddingTable, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path.display(), e))?;
    read_embeddings(file, vocab, dim, init_range, rng)
}

pub fn read_embeddings<R: Rng>(
    reader: impl Read,
    vocab: &Vocabulary,
    dim: usize,
    init_range: f64,
    rng: &mut R,
) -> Result<EmbeddingTable, CorpusError> {
    let mut matrix = Tensor::zeros(&[vocab.len(), dim]);
    for v in matrix.data_mut() {
        *v = rng.gen_range(-init_range..=init_range);
    }
    let mut filled = vec![false; vocab.len()];
    let mut found = 0;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::io(format!("embeddings line {line_no}"), e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<&str> = parts.collect();
        // optional word2vec-style "count dim" header
        if line_no == 1 && values.len() == 1 && word.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        if values.len() != dim {
            return Err(CorpusError::EmbeddingDim { line: line_no, expected: dim, found: values.len() });
        }
        let mut idx = vocab.lookup(word);
        if idx == 0 {
            idx = vocab.lookup(&word.to_lowercase());
        }
        if idx == 0 || filled[idx] {
            continue;
        }
        let row = matrix.row_mut(idx);
        for (slot, text) in row.iter_mut().zip(&values) {
            *slot = text.parse().map_err(|_| CorpusError::Line {
                path: "embeddings".into(),
                line: line_no,
                message: format!("`{text}` is not a number"),
            })?;
        }
        filled[idx] = true;
        found += 1;
    }
    Ok(EmbeddingTable { matrix, dim, found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> Vocabulary {
        Vocabulary::from_words(vec!["<unk>".into(), "good".into(), "food".into()]).unwrap()
    }

    #[test]
    fn copies_known_rows_and_randomizes_the_rest() {
        let text = "good 0.1 0.2 0.3\nunrelated 1 1 1\n";
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = read_embeddings(text.as_bytes(), &vocab(), 3, 0.01, &mut rng).unwrap();
        assert_eq!(t.matrix.row(1), &[0.1, 0.2, 0.3]);
        assert!(t.matrix.row(2).iter().all(|v| v.abs() <= 0.01));
        assert_eq!(t.found, 1);
        assert!((t.coverage() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_line_is_fatal_with_line_number() {
        let text = "3 3\ngood 0.1 0.2 0.3\nfood 0.1 0.2\n";
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = read_embeddings(text.as_bytes(), &vocab(), 3, 0.01, &mut rng).unwrap_err();
        assert!(matches!(err, CorpusError::EmbeddingDim { line: 3, expected: 3, found: 2 }));
    }

    #[test]
    fn full_width_vectors() {
        let values: Vec<String> = (0..300).map(|i| format!("{}", i as f64 / 1000.0)).collect();
        let text = format!("good {}\n", values.join(" "));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = read_embeddings(text.as_bytes(), &vocab(), 300, 0.01, &mut rng).unwrap();
        assert_eq!(t.matrix.row(1)[299], 0.299);
        let short = format!("good {}\n", values[..299].join(" "));
        let err = read_embeddings(short.as_bytes(), &vocab(), 300, 0.01, &mut rng).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
