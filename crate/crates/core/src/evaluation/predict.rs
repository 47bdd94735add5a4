use rayon::prelude::*;

use crate::autodiff::Tape;
use crate::corpus::{EncodedInstance, EvalMode, Polarity};
use crate::network::{forward, InstanceInput, ModelParams, NetworkError, NoNoise};

use super::{acd_metrics, alsc_metrics, AcdReport, EvalError, MetricsReport};

/// Inference result for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub id: String,
    /// per aspect: class probabilities
    pub alsc_probs: Vec<Vec<f64>>,
    pub alsc_pred: Vec<usize>,
    pub alsc_attention: Vec<Vec<f64>>,
    /// per category, multi-task models only
    pub acd_scores: Option<Vec<f64>>,
    pub acd_attention: Option<Vec<Vec<f64>>>,
}

fn rows(t: &crate::autodiff::Tensor) -> Vec<Vec<f64>> {
    let width = t.shape()[1];
    t.data().chunks(width).map(<[f64]>::to_vec).collect()
}

/// First index of the largest value.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_one(model: &ModelParams, inst: &EncodedInstance) -> Result<Prediction, NetworkError> {
    let mask = vec![true; inst.token_ids.len()];
    let input = InstanceInput { token_ids: &inst.token_ids, mask: &mask, aspects: &inst.aspects, overlap: inst.overlap };
    let mut tape = Tape::new(model.store());
    let out = forward(&mut tape, model, &input, &mut NoNoise)?.output(&tape);
    let alsc_probs = rows(&out.alsc_probs);
    Ok(Prediction {
        id: inst.id.clone(),
        alsc_pred: alsc_probs.iter().map(|p| argmax(p)).collect(),
        alsc_probs,
        alsc_attention: rows(&out.alsc_attention),
        acd_scores: out.acd_scores,
        acd_attention: out.acd_attention.as_ref().map(rows),
    })
}

/// Runs inference over `instances` in parallel; results keep input order.
pub fn predict(model: &ModelParams, instances: &[EncodedInstance]) -> Result<Vec<Prediction>, NetworkError> {
    instances.par_iter().map(|inst| predict_one(model, inst)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub alsc: MetricsReport,
    pub acd: Option<AcdReport>,
}

impl Evaluation {
    /// Lexicographic selection key: accuracy, then detection F1, then macro-F1.
    pub fn key(&self) -> [f64; 3] {
        [self.alsc.accuracy, self.acd.as_ref().map_or(0.0, |a| a.f1), self.alsc.macro_f1]
    }
}

/// Sentiment metrics over every aspect of `instances`, plus detection
/// metrics at threshold 0.5 for multi-task models.
pub fn evaluate(model: &ModelParams, instances: &[EncodedInstance], mode: EvalMode) -> Result<Evaluation, EvalError> {
    let preds = predict(model, instances)?;
    Ok(score_predictions(&preds, instances, mode, model.n_categories())?)
}

pub fn score_predictions(
    preds: &[Prediction],
    instances: &[EncodedInstance],
    mode: EvalMode,
    n_categories: usize,
) -> Result<Evaluation, EvalError> {
    let classes = mode.classes();
    let polarity = |i: usize| -> Result<Polarity, EvalError> {
        classes.get(i).copied().ok_or_else(|| EvalError::Mismatch(format!("class index {i} outside {mode} mode")))
    };
    let (mut p, mut g) = (Vec::new(), Vec::new());
    for (pred, inst) in preds.iter().zip(instances) {
        for (&y_hat, a) in pred.alsc_pred.iter().zip(&inst.aspects) {
            p.push(polarity(y_hat)?);
            g.push(polarity(a.label)?);
        }
    }
    let alsc = alsc_metrics(&p, &g, mode)?;
    let acd = if preds.iter().all(|p| p.acd_scores.is_some()) && !preds.is_empty() {
        let scores: Vec<Vec<f64>> = preds.iter().map(|p| p.acd_scores.clone().expect("checked")).collect();
        let golds: Vec<Vec<bool>> = instances
            .iter()
            .map(|inst| {
                let mut g = vec![false; n_categories];
                for a in &inst.aspects {
                    g[a.category] = true;
                }
                g
            })
            .collect();
        Some(acd_metrics(&scores, &golds, 0.5)?)
    } else {
        None
    };
    Ok(Evaluation { alsc, acd })
}
