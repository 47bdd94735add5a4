use std::fmt::Write as _;

use crate::corpus::{Aspect, CategoryInventory, EncodedInstance, EvalMode, Instance, Vocabulary};
use crate::network::ModelParams;

use super::{predict_one, EvalError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatmapTask {
    Alsc,
    Acd,
}

impl HeatmapTask {
    pub fn as_str(self) -> &'static str {
        match self {
            HeatmapTask::Alsc => "alsc",
            HeatmapTask::Acd => "acd",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapRow {
    pub label: String,
    /// one weight per token, as produced by the model
    pub weights: Vec<f64>,
    pub predicted: String,
    pub gold: String,
}

/// Attention weights of one sentence for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapDoc {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub task: HeatmapTask,
    pub rows: Vec<HeatmapRow>,
}

/// Attention heatmaps for `instances`. Sentiment docs have one row per
/// mentioned aspect; detection docs one row per category in the inventory.
pub fn render_heatmaps(
    model: &ModelParams,
    vocab: &Vocabulary,
    inventory: &CategoryInventory,
    mode: EvalMode,
    instances: &[Instance],
    task: HeatmapTask,
) -> Result<Vec<HeatmapDoc>, EvalError> {
    if model.vocab_size() != vocab.len() {
        return Err(EvalError::Mismatch(format!(
            "model has {} word embeddings but the vocabulary has {} entries",
            model.vocab_size(),
            vocab.len()
        )));
    }
    if model.n_categories() != inventory.len() {
        return Err(EvalError::Mismatch(format!(
            "model knows {} categories but the inventory lists {}",
            model.n_categories(),
            inventory.len()
        )));
    }
    if task == HeatmapTask::Acd && !model.config().multi_task {
        return Err(EvalError::Mismatch("detection attention needs a multi-task model".into()));
    }
    let classes = mode.classes();
    instances
        .iter()
        .map(|inst| {
            let mut aspects = Vec::with_capacity(inst.mentions.len());
            for m in &inst.mentions {
                let category = inventory.index_of(&m.category).ok_or_else(|| {
                    EvalError::Mismatch(format!("sentence {} mentions unknown category `{}`", inst.id(), m.category))
                })?;
                aspects.push(Aspect { category, label: m.polarity.class_index(mode).unwrap_or(0) });
            }
            let encoded = EncodedInstance {
                id: inst.id().to_string(),
                token_ids: inst.sentence.tokens.iter().map(|t| vocab.lookup(t)).collect(),
                aspects,
                overlap: inst.overlap,
            };
            let pred = predict_one(model, &encoded)?;
            let rows = match task {
                HeatmapTask::Alsc => inst
                    .mentions
                    .iter()
                    .enumerate()
                    .map(|(k, m)| HeatmapRow {
                        label: m.category.clone(),
                        weights: pred.alsc_attention[k].clone(),
                        predicted: classes[pred.alsc_pred[k]].as_str().to_string(),
                        gold: m.polarity.as_str().to_string(),
                    })
                    .collect(),
                HeatmapTask::Acd => {
                    let scores = pred.acd_scores.as_ref().expect("multi-task model");
                    let attention = pred.acd_attention.as_ref().expect("multi-task model");
                    inventory
                        .labels()
                        .iter()
                        .enumerate()
                        .map(|(n, label)| HeatmapRow {
                            label: label.clone(),
                            weights: attention[n].clone(),
                            predicted: format!("{:.3}", scores[n]),
                            gold: if encoded.aspects.iter().any(|a| a.category == n) { "yes" } else { "no" }.to_string(),
                        })
                        .collect()
                }
            };
            Ok(HeatmapDoc { sentence_id: inst.id().to_string(), tokens: inst.sentence.tokens.clone(), task, rows })
        })
        .collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

impl HeatmapDoc {
    fn html_table(&self, out: &mut String) {
        let (pred_head, gold_head) = match self.task {
            HeatmapTask::Alsc => ("predicted", "gold"),
            HeatmapTask::Acd => ("score", "mentioned"),
        };
        let _ = writeln!(out, "<h2>{} attention: {}</h2>", self.task.as_str(), escape(&self.sentence_id));
        let _ = writeln!(out, "<table class=\"{}\">", self.task.as_str());
        let _ = writeln!(out, "<tr><th>aspect</th><th>{pred_head}</th><th>{gold_head}</th></tr>");
        for row in &self.rows {
            let _ = write!(
                out,
                "<tr><th>{}</th><td>{}</td><td>{}</td><td class=\"tokens\">",
                escape(&row.label),
                escape(&row.predicted),
                escape(&row.gold)
            );
            for (tok, w) in self.tokens.iter().zip(&row.weights) {
                let _ = write!(
                    out,
                    "<span style=\"background-color: rgba(200, 30, 30, {w:.6})\" data-weight=\"{w:.6}\">{}</span> ",
                    escape(tok)
                );
            }
            out.push_str("</td></tr>\n");
        }
        out.push_str("</table>\n");
    }

    /// Plain-text fallback: `token(weight)` lists per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {} {}\n", self.task.as_str(), self.sentence_id);
        for row in &self.rows {
            let _ = write!(out, "{} [predicted={} gold={}]:", row.label, row.predicted, row.gold);
            for (tok, w) in self.tokens.iter().zip(&row.weights) {
                let _ = write!(out, " {tok}({w:.6})");
            }
            out.push('\n');
        }
        out
    }
}

/// Standalone HTML page holding every doc in order. Cell background
/// opacity equals the attention weight.
pub fn render_html(title: &str, docs: &[HeatmapDoc]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>", escape(title));
    out.push_str(
        "<style>\nbody { font-family: sans-serif; }\ntable { border-collapse: collapse; margin-bottom: 1.5em; }\n\
         th, td { padding: 2px 8px; text-align: left; }\nspan { padding: 1px 2px; }\n</style>\n</head>\n<body>\n",
    );
    let _ = writeln!(out, "<h1>{}</h1>", escape(title));
    for doc in docs {
        doc.html_table(&mut out);
    }
    out.push_str("</body>\n</html>\n");
    out
}
