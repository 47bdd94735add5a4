use crate::corpus::{EvalMode, Polarity};

use super::EvalError;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassScores {
    pub class: Polarity,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// gold instances of this class
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
    /// aspect-level decisions evaluated
    pub count: usize,
}

impl MetricsReport {
    /// Two-column `metric<TAB>value` listing.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("mode\t{}\ncount\t{}\naccuracy\t{:.6}\nmacro_f1\t{:.6}\n", self.mode.as_str(), self.count, self.accuracy, self.macro_f1);
        for c in &self.per_class {
            let name = c.class.as_str();
            out.push_str(&format!(
                "{name}.precision\t{:.6}\n{name}.recall\t{:.6}\n{name}.f1\t{:.6}\n{name}.support\t{}\n",
                c.precision, c.recall, c.f1, c.support
            ));
        }
        out
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

/// Accuracy and macro-F1 over aspect-level decisions. In binary mode pairs
/// with a neutral gold label are left out. Classes never predicted get
/// precision 0; classes absent from both sides still count, with F1 = 0.
pub fn alsc_metrics(predictions: &[Polarity], golds: &[Polarity], mode: EvalMode) -> Result<MetricsReport, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::Length { predictions: predictions.len(), golds: golds.len() });
    }
    let classes = mode.classes();
    let pairs: Vec<(Polarity, Polarity)> = predictions
        .iter()
        .zip(golds)
        .filter(|(_, g)| classes.contains(g))
        .map(|(&p, &g)| (p, g))
        .collect();
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = pairs.iter().filter(|(p, g)| p == g).count();
    let per_class: Vec<ClassScores> = classes
        .iter()
        .map(|&c| {
            let tp = pairs.iter().filter(|&&(p, g)| p == c && g == c).count();
            let predicted = pairs.iter().filter(|&&(p, _)| p == c).count();
            let support = pairs.iter().filter(|&&(_, g)| g == c).count();
            let (precision, recall) = (ratio(tp, predicted), ratio(tp, support));
            ClassScores { class: c, precision, recall, f1: f1(precision, recall), support }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / classes.len() as f64;
    Ok(MetricsReport { mode, accuracy: ratio(correct, pairs.len()), macro_f1, per_class, count: pairs.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcdReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl AcdReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "threshold\t{}\nprecision\t{:.6}\nrecall\t{:.6}\nf1\t{:.6}\ntp\t{}\nfp\t{}\nfn\t{}\n",
            self.threshold, self.precision, self.recall, self.f1, self.true_positives, self.false_positives, self.false_negatives
        )
    }
}

/// Micro-averaged detection scores; category `n` is predicted when its score
/// reaches `threshold`. Precision is 0 when nothing is predicted.
pub fn acd_metrics(scores: &[Vec<f64>], golds: &[Vec<bool>], threshold: f64) -> Result<AcdReport, EvalError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::Threshold(threshold));
    }
    if scores.len() != golds.len() {
        return Err(EvalError::Length { predictions: scores.len(), golds: golds.len() });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (s, g) in scores.iter().zip(golds) {
        if s.len() != g.len() {
            return Err(EvalError::Length { predictions: s.len(), golds: g.len() });
        }
        for (&score, &gold) in s.iter().zip(g) {
            match (score >= threshold, gold) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(AcdReport {
        precision,
        recall,
        f1: f1(precision, recall),
        threshold,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
    })
}
