#![allow(dead_code)]

use can_core::corpus::{EvalMode, Polarity};
use can_core::network::{Architecture, Gram, ModelConfig, Regularizer};
use rand::Rng;

/// Accuracy, macro-F1 and per-class (P, R, F1) from a full confusion matrix.
pub struct AlscOracle {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<(f64, f64, f64)>,
    pub count: usize,
}

pub fn alsc_oracle(predictions: &[Polarity], golds: &[Polarity], mode: EvalMode) -> Option<AlscOracle> {
    let all = Polarity::ALL;
    let idx = |p: Polarity| all.iter().position(|&q| q == p).unwrap();
    let mut confusion = [[0usize; 3]; 3];
    for (&p, &g) in predictions.iter().zip(golds) {
        if mode == EvalMode::Binary && g == Polarity::Neutral {
            continue;
        }
        confusion[idx(g)][idx(p)] += 1;
    }
    let count: usize = confusion.iter().flatten().sum();
    if count == 0 {
        return None;
    }
    let classes = mode.classes();
    let trace: usize = classes.iter().map(|&c| confusion[idx(c)][idx(c)]).sum();
    let per_class: Vec<(f64, f64, f64)> = classes
        .iter()
        .map(|&c| {
            let i = idx(c);
            let tp = confusion[i][i];
            let col: usize = (0..3).map(|g| confusion[g][i]).sum();
            let row: usize = confusion[i].iter().sum();
            let p = if col == 0 { 0.0 } else { tp as f64 / col as f64 };
            let r = if row == 0 { 0.0 } else { tp as f64 / row as f64 };
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            (p, r, f)
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.2).sum::<f64>() / classes.len() as f64;
    Some(AlscOracle { accuracy: trace as f64 / count as f64, macro_f1, per_class, count })
}

/// Micro precision, recall and F1 of thresholded multi-label scores.
pub fn acd_oracle(scores: &[Vec<f64>], golds: &[Vec<bool>], threshold: f64) -> (f64, f64, f64) {
    let mut counts = [[0usize; 2]; 2];
    for (s, g) in scores.iter().zip(golds) {
        for (&score, &gold) in s.iter().zip(g) {
            counts[usize::from(score >= threshold)][usize::from(gold)] += 1;
        }
    }
    let (tp, fp, fn_) = (counts[1][1], counts[1][0], counts[0][1]);
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// `|Σ α² − 1|` by direct summation.
pub fn sparse_brute(row: &[f64]) -> f64 {
    let mut s = 0.0;
    for &a in row {
        s += a * a;
    }
    (s - 1.0).abs()
}

/// Frobenius norm of `M Mᵀ − I` from explicit dot products.
pub fn orthogonal_brute(rows: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            let mut dot = 0.0;
            for l in 0..rows[i].len() {
                dot += rows[i][l] * rows[j][l];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            total += (dot - target) * (dot - target);
        }
    }
    total.sqrt()
}

pub fn random_stochastic_rows<R: Rng>(rng: &mut R, k: usize, l: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..l).map(|_| rng.gen::<f64>().powi(3)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect()
}

pub fn random_polarity<R: Rng>(rng: &mut R) -> Polarity {
    Polarity::ALL[rng.gen_range(0..3)]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every configuration accepted by `validate`, over both Gram readings.
pub fn all_configs(classes: usize, hidden: usize) -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for variant in [Architecture::LstmAvg, Architecture::At, Architecture::Atae] {
        for multi_task in [false, true] {
            for reg_alsc in [Regularizer::None, Regularizer::Rs, Regularizer::Ro] {
                for reg_acd in [Regularizer::None, Regularizer::Rs, Regularizer::Ro] {
                    for gram in [Gram::Rows, Gram::Positions] {
                        let c = ModelConfig {
                            variant,
                            multi_task,
                            reg_alsc,
                            reg_acd,
                            lambda: 0.5,
                            classes,
                            hidden,
                            gram,
                        };
                        let uses_gram = reg_alsc == Regularizer::Ro || reg_acd == Regularizer::Ro;
                        if c.validate().is_ok() && (gram == Gram::Rows || uses_gram) {
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}
