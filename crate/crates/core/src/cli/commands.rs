use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{encode, load_embeddings, read_dump, tokenize, AspectMention, EvalMode, Instance, Polarity, Sentence};
use crate::evaluation::{compare_runs, evaluate, render_heatmaps, render_html, HeatmapDoc, HeatmapTask};
use crate::seed::rng_for;
use crate::training::{init_params, train, Checkpoint, History};

use super::data::{load_data, write_file};
use super::{CliError, RunConfig};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const HISTORY_FILE: &str = "history.tsv";
pub const RUN_CONFIG_FILE: &str = "run.conf";

/// Writes canonical dumps, vocabulary, categories, split manifest and a
/// statistics table into `cfg.out`. Returns the statistics table.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<String, CliError> {
    let data = load_data(cfg)?;
    data.write(&cfg.out)?;
    let mut summary = data.summary_tsv();
    if let Some(m) = &data.merge {
        let _ = writeln!(
            summary,
            "# overlap annotations: {} applied, {} defaulted to non-overlapping, {} unmatched",
            m.applied,
            m.defaulted.len(),
            m.unknown.len()
        );
    }
    Ok(summary)
}

/// Trains the configured variant and writes the best checkpoint, the
/// per-epoch history and the resolved configuration into `cfg.out`.
pub fn cmd_train(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let mode = cfg.mode;
    let model_config = cfg.model_config(mode.num_classes())?;
    let data = load_data(cfg)?;
    let train_set = encode(&data.train, &data.vocab, &data.categories, mode)?;
    let val_set = encode(&data.val, &data.vocab, &data.categories, mode)?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CliError::Data(format!("no {mode} instances in the training or validation split")));
    }
    let pretrained = match &cfg.embeddings {
        Some(path) => {
            let mut rng = rng_for(cfg.train.seed, &[0xe3b]);
            let table = load_embeddings(path, &data.vocab, cfg.hidden, cfg.train.init_range, &mut rng)?;
            log::info!("embeddings cover {:.2}% of the vocabulary", 100.0 * table.coverage());
            Some(table.matrix)
        }
        None => None,
    };
    let init = init_params(
        &model_config,
        data.vocab.len(),
        data.categories.len(),
        cfg.train.init_range,
        cfg.train.seed,
        pretrained.as_ref(),
    )?;
    let variant = model_config.variant_name().unwrap_or("custom").to_string();
    let mut meta = vec![
        ("variant".to_string(), variant.clone()),
        ("dataset".into(), cfg.dataset.as_str().into()),
        ("mode".into(), mode.as_str().into()),
        ("seed".into(), cfg.train.seed.to_string()),
    ];
    meta.extend(model_config.to_pairs("model."));
    meta.extend(cfg.train.to_pairs("train."));
    let outcome = train(&train_set, &val_set, init, &cfg.train, mode, meta)?;
    let checkpoint = Checkpoint {
        epoch: outcome.best_epoch,
        metric: outcome.best_eval.key(),
        params: outcome.best,
        train_config: cfg.train.clone(),
        fingerprint: outcome.fingerprint,
        mode,
        vocab: data.vocab,
        categories: data.categories,
    };
    write_file(&cfg.out.join(CHECKPOINT_FILE), &checkpoint.to_text())?;
    write_file(&cfg.out.join(HISTORY_FILE), &outcome.history.to_tsv())?;
    write_file(&cfg.out.join(RUN_CONFIG_FILE), &cfg.to_text())?;
    Ok(format!(
        "{variant}: {} epochs, best epoch {} with validation accuracy {:.4} and macro-F1 {:.4}\n",
        outcome.epochs_run, outcome.best_epoch, outcome.best_eval.alsc.accuracy, outcome.best_eval.alsc.macro_f1
    ))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(Checkpoint::from_text(&text, &path.display().to_string())?)
}

/// Which instances an evaluation or visualisation reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// a split of the configured dataset: `train`, `val` or `test`
    Split(String),
    /// a JSON-lines instance dump
    Dump(PathBuf),
}

fn load_source(cfg: &RunConfig, source: &Source) -> Result<Vec<Instance>, CliError> {
    match source {
        Source::Dump(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(read_dump(&text, &path.display().to_string())?)
        }
        Source::Split(name) => {
            let data = load_data(cfg)?;
            match name.as_str() {
                "train" => Ok(data.train),
                "val" => Ok(data.val),
                "test" => Ok(data.test),
                other => Err(CliError::Config(format!("unknown split `{other}` (expected train, val or test)"))),
            }
        }
    }
}

fn check_mode(checkpoint: &Checkpoint, mode: EvalMode) -> Result<(), CliError> {
    let classes = checkpoint.params.config().classes;
    if classes != mode.num_classes() {
        return Err(CliError::Config(format!(
            "checkpoint predicts {classes} classes but {mode} mode has {}",
            mode.num_classes()
        )));
    }
    Ok(())
}

/// Scores a checkpoint on `source` and writes `metrics.tsv` (and
/// `acd_metrics.tsv` for multi-task models) into `cfg.out`. `mode`
/// defaults to the checkpoint's.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, source: &Source, mode: Option<EvalMode>) -> Result<String, CliError> {
    let ck = load_checkpoint(checkpoint)?;
    let mode = mode.unwrap_or(ck.mode);
    check_mode(&ck, mode)?;
    let instances = load_source(cfg, source)?;
    let encoded = encode(&instances, &ck.vocab, &ck.categories, mode)?;
    if encoded.is_empty() {
        return Err(CliError::Data(format!("no {mode} instances to evaluate")));
    }
    let eval = evaluate(&ck.params, &encoded, mode)?;
    let mut report = eval.alsc.to_tsv();
    write_file(&cfg.out.join("metrics.tsv"), &report)?;
    if let Some(acd) = &eval.acd {
        let text = acd.to_tsv();
        write_file(&cfg.out.join("acd_metrics.tsv"), &text)?;
        report.push_str(&text);
    }
    Ok(report)
}

/// A sentence to visualise: an id from the data or raw text with aspects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Id(String),
    Raw { text: String, aspects: String },
}

/// Parses `food:positive,service:negative`.
pub fn parse_aspects(spec: &str) -> Result<Vec<AspectMention>, CliError> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (category, polarity) = item
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("aspect `{item}` is not `category:polarity`")))?;
            let polarity: Polarity = polarity
                .trim()
                .parse()
                .map_err(|p| CliError::Config(format!("unknown polarity `{p}` in aspect `{item}`")))?;
            Ok(AspectMention { category: category.trim().to_string(), polarity })
        })
        .collect()
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `heatmap-<id>.html` and `heatmap-<id>.txt` per target into
/// `cfg.out`, holding sentiment attention and, for multi-task models,
/// detection attention. Several checkpoints are shown one after another.
pub fn cmd_visualize(
    cfg: &RunConfig,
    checkpoints: &[PathBuf],
    targets: &[Target],
    source: &Source,
) -> Result<Vec<PathBuf>, CliError> {
    if checkpoints.is_empty() || targets.is_empty() {
        return Err(CliError::Config("visualize needs at least one checkpoint and one sentence".into()));
    }
    let models = checkpoints.iter().map(|p| load_checkpoint(p)).collect::<Result<Vec<_>, _>>()?;
    let needs_data = targets.iter().any(|t| matches!(t, Target::Id(_)));
    let pool = if needs_data { load_source(cfg, source)? } else { Vec::new() };
    let mut written = Vec::new();
    for target in targets {
        let inst = match target {
            Target::Id(id) => pool
                .iter()
                .find(|i| i.id() == id)
                .cloned()
                .ok_or_else(|| CliError::Data(format!("unknown sentence id `{id}`")))?,
            Target::Raw { text, aspects } => {
                let sentence = Sentence { id: "input".into(), tokens: tokenize(text), raw_text: text.clone() };
                Instance::new(sentence, parse_aspects(aspects)?)?
            }
        };
        let mut docs: Vec<HeatmapDoc> = Vec::new();
        for (ck, path) in models.iter().zip(checkpoints) {
            let mut tasks = vec![HeatmapTask::Alsc];
            if ck.params.config().multi_task {
                tasks.push(HeatmapTask::Acd);
            }
            for task in tasks {
                let mut d = render_heatmaps(&ck.params, &ck.vocab, &ck.categories, ck.mode, std::slice::from_ref(&inst), task)?;
                if models.len() > 1 {
                    for doc in &mut d {
                        doc.sentence_id = format!("{} ({})", doc.sentence_id, path.display());
                    }
                }
                docs.extend(d);
            }
        }
        let stem = format!("heatmap-{}", file_stem(inst.id()));
        let html = cfg.out.join(format!("{stem}.html"));
        write_file(&html, &render_html(&format!("sentence {}", inst.id()), &docs))?;
        let text: String = docs.iter().map(HeatmapDoc::to_text).collect();
        write_file(&cfg.out.join(format!("{stem}.txt")), &text)?;
        written.push(html);
    }
    Ok(written)
}

/// Reads history files and writes one comparison table per evaluation mode
/// plus per-epoch series of the loss and regularizer columns into `out`.
/// Runs are named after the directory holding their history.
pub fn cmd_compare(histories: &[PathBuf], out: &Path) -> Result<String, CliError> {
    let mut runs = Vec::with_capacity(histories.len());
    for path in histories {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let history = History::from_tsv(&text, &path.display().to_string())?;
        let name = path
            .parent()
            .and_then(Path::file_name)
            .or_else(|| path.file_stem())
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        runs.push((name, history));
    }
    let comparison = compare_runs(runs)?;
    let mut report = String::new();
    for flag in &comparison.flags {
        let _ = writeln!(report, "# {flag}");
    }
    for group in &comparison.groups {
        let table = group.table_tsv();
        write_file(&out.join(format!("compare-{}.tsv", group.mode)), &table)?;
        for column in ["train_loss", "R_s_component", "R_o_component", "val_acc"] {
            write_file(&out.join(format!("series-{}-{column}.tsv", group.mode)), &group.series_tsv(column)?)?;
        }
        report.push_str(&table);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aspects_parse() {
        let a = parse_aspects("food:positive, service:negative").unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].category, "service");
        assert_eq!(a[1].polarity, Polarity::Negative);
        assert!(parse_aspects("food").is_err());
        assert!(parse_aspects("food:great").is_err());
    }

    #[test]
    fn stems_are_filesystem_safe() {
        assert_eq!(file_stem("1234#5/a"), "1234_5_a");
    }
}
