use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{
    build_vocab, make_synthetic_corpus, merge_overlap_annotations, parse_overlap_annotations, parse_semeval14,
    parse_semeval15, read_dump, split_train_val, write_dump, CategoryInventory, CorpusError, Instance,
    MergeReport, SplitSummary, SyntheticSpec, Vocabulary,
};

use super::{CliError, Dataset, RunConfig};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VAL_FILE: &str = "val.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const CATEGORIES_FILE: &str = "categories.txt";
pub const SPLIT_FILE: &str = "split.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";

/// Train/validation/test instances with the vocabulary and category
/// inventory derived from them.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSplits {
    pub train: Vec<Instance>,
    pub val: Vec<Instance>,
    pub test: Vec<Instance>,
    pub vocab: Vocabulary,
    pub categories: CategoryInventory,
    /// present when overlap annotations were applied
    pub merge: Option<MergeReport>,
}

fn data_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| data_error(path, e))
}

/// Loads the configured dataset: a prepared directory if one is set,
/// otherwise the raw SemEval files or the synthetic generator.
pub fn load_data(cfg: &RunConfig) -> Result<DataSplits, CliError> {
    if let Some(dir) = &cfg.prepared {
        return load_prepared(dir);
    }
    let (pool, test, categories, merge) = match cfg.dataset {
        Dataset::Synthetic => {
            let spec = SyntheticSpec {
                n_sentences: cfg.synthetic_sentences + cfg.synthetic_test,
                n_categories: cfg.synthetic_categories,
                seed: cfg.synthetic_seed,
                n_polarities: cfg.synthetic_polarities,
                ..SyntheticSpec::default()
            };
            let (mut all, categories) = make_synthetic_corpus(&spec);
            let test = all.split_off(cfg.synthetic_sentences);
            (all, test, categories, None)
        }
        Dataset::Rest14 | Dataset::Rest15 => {
            let parser = if cfg.dataset == Dataset::Rest14 { parse_semeval14 } else { parse_semeval15 };
            let load = |path: &Path| parser(&read(path)?).map_err(|e| data_error(path, e));
            let mut pool = load(&cfg.train_xml_path())?;
            let mut test = load(&cfg.test_xml_path())?;
            let merge = match cfg.overlap_path() {
                Some(path) => {
                    let ann = parse_overlap_annotations(&read(&path)?, &path.display().to_string())?;
                    let mut report = merge_overlap_annotations(&mut pool, &ann);
                    let test_report = merge_overlap_annotations(&mut test, &ann);
                    report.applied += test_report.applied;
                    report.defaulted.extend(test_report.defaulted);
                    report.unknown.retain(|id| test_report.unknown.contains(id));
                    Some(report)
                }
                None => None,
            };
            let categories = CategoryInventory::from_instances(pool.iter().chain(&test));
            (pool, test, categories, merge)
        }
    };
    let (train, val) = split_train_val(&pool, (5, 1), cfg.split_seed)?;
    let vocab = build_vocab(&train);
    Ok(DataSplits { train, val, test, vocab, categories, merge })
}

pub fn load_prepared(dir: &Path) -> Result<DataSplits, CliError> {
    let dump = |name: &str| {
        let path = dir.join(name);
        read_dump(&read(&path)?, &path.display().to_string()).map_err(CliError::from)
    };
    let vocab_path = dir.join(VOCAB_FILE);
    let vocab = Vocabulary::from_text(&read(&vocab_path)?).map_err(|e| data_error(&vocab_path, e))?;
    let categories = CategoryInventory::new(read(&dir.join(CATEGORIES_FILE))?.lines().map(str::to_string).collect());
    Ok(DataSplits { train: dump(TRAIN_FILE)?, val: dump(VAL_FILE)?, test: dump(TEST_FILE)?, vocab, categories, merge: None })
}

impl DataSplits {
    /// Counts of single, multi, overlapping and non-overlapping sentences per split.
    pub fn summary_tsv(&self) -> String {
        let mut train_val = self.train.clone();
        train_val.extend(self.val.iter().cloned());
        let mut out = String::from("split\tsingle\tmulti\toverlapping\tnon_overlapping\ttotal\n");
        for (name, set) in [("train", &self.train), ("val", &self.val), ("train+val", &train_val), ("test", &self.test)] {
            let s = SplitSummary::of(set);
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}",
                s.single,
                s.multi(),
                s.overlapping,
                s.non_overlapping,
                s.total()
            );
        }
        out
    }

    /// Sentence id to split assignment.
    pub fn manifest_tsv(&self) -> String {
        let mut out = String::from("id\tsplit\n");
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for inst in set {
                let _ = writeln!(out, "{}\t{name}", inst.id());
            }
        }
        out
    }

    /// Writes the dumps, vocabulary, categories, manifest and summary into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let files = [
            (TRAIN_FILE, write_dump(&self.train)),
            (VAL_FILE, write_dump(&self.val)),
            (TEST_FILE, write_dump(&self.test)),
            (VOCAB_FILE, self.vocab.to_text()),
            (CATEGORIES_FILE, self.categories.labels().iter().map(|l| format!("{l}\n")).collect()),
            (SPLIT_FILE, self.manifest_tsv()),
            (SUMMARY_FILE, self.summary_tsv()),
        ];
        for (name, text) in files {
            write_file(&dir.join(name), &text)?;
        }
        Ok(())
    }

    /// Every instance across splits, for lookups by id.
    pub fn all(&self) -> impl Iterator<Item = &Instance> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}
