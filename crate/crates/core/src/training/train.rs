use rayon::prelude::*;

use crate::autodiff::{Gradients, Tape};
use crate::corpus::{batches, Batch, EncodedInstance, EvalMode, Overlap};
use crate::evaluation::{evaluate, Evaluation};
use crate::network::{forward, orthogonal_reg_value, sparse_reg_value, InstanceInput, ModelParams};
use crate::seed::{derive_seed, rng_for};

use super::{adagrad_step, AdagradState, Dropout, EpochRecord, History, TrainConfig, TrainError};

/// Patience counter over a lexicographic validation key.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: Option<[f64; 3]>,
    /// consecutive evaluations without improvement
    pub since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: None, since_best: 0 }
    }

    /// Records an evaluation and reports whether it strictly improved on the best so far.
    pub fn observe(&mut self, key: [f64; 3]) -> bool {
        let improved = match self.best {
            None => true,
            Some(best) => key.partial_cmp(&best) == Some(std::cmp::Ordering::Greater),
        };
        if improved {
            self.best = Some(key);
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        improved
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best: ModelParams,
    /// 0 when no epoch beat the initial parameters
    pub best_epoch: usize,
    pub best_eval: Evaluation,
    /// parameters after the last epoch run
    pub last: ModelParams,
    pub history: History,
    pub fingerprint: u64,
    pub epochs_run: usize,
}

struct InstanceStep {
    grads: Gradients,
    loss: f64,
    l_a: f64,
    l_b: f64,
    reg: f64,
    r_s: f64,
    r_o: Option<f64>,
}

fn instance_step(
    model: &ModelParams,
    inst: &EncodedInstance,
    batch: &Batch,
    row: usize,
    config: &TrainConfig,
    tags: [u64; 3],
) -> Result<InstanceStep, TrainError> {
    let input = InstanceInput {
        token_ids: &batch.token_ids[row],
        mask: &batch.mask[row],
        aspects: &inst.aspects,
        overlap: inst.overlap,
    };
    let mut noise = Dropout { p: config.dropout, rng: rng_for(config.seed, &[0xd70, tags[0], tags[1], tags[2]]) };
    let mut tape = Tape::new(model.store());
    let fwd = forward(&mut tape, model, &input, &mut noise)?;
    let out = fwd.output(&tape);
    let [epoch, batch_index, _] = tags;
    for (term, value) in [("L_a", out.l_a), ("L_b", out.l_b), ("R", out.reg_value), ("loss", out.loss)] {
        if !value.is_finite() {
            return Err(TrainError::NonFinite { epoch: epoch as usize, batch: batch_index as usize, term, value });
        }
    }
    let grads = tape.backward(fwd.loss)?.params;
    let width = out.alsc_attention.shape()[1];
    let rows: Vec<Vec<f64>> = out.alsc_attention.data().chunks(width).map(<[f64]>::to_vec).collect();
    let r_s = rows.iter().map(|r| sparse_reg_value(r)).sum();
    let r_o = (inst.overlap == Overlap::NonOverlapping && rows.len() >= 2)
        .then(|| orthogonal_reg_value(&rows, model.config().gram));
    Ok(InstanceStep { grads, loss: out.loss, l_a: out.l_a, l_b: out.l_b, reg: out.reg_value, r_s, r_o })
}

/// Trains `init` with Adagrad on mini-batches of `train`, selecting the
/// parameters with the best validation key. The initial parameters are
/// evaluated first and count as epoch 0 for selection and patience.
///
/// Batch gradients are the mean of per-sentence gradients, accumulated in
/// batch order, so results do not depend on the number of worker threads.
pub fn train(
    train: &[EncodedInstance],
    val: &[EncodedInstance],
    init: ModelParams,
    config: &TrainConfig,
    mode: EvalMode,
    meta: Vec<(String, String)>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(TrainError::Config("training and validation sets must be nonempty".into()));
    }
    let mut model = init;
    let mut state = AdagradState::new(model.store());
    let mut stopper = EarlyStopping::new(config.patience);
    let baseline = evaluate(&model, val, mode)?;
    stopper.observe(baseline.key());
    let (mut best, mut best_epoch, mut best_eval) = (model.clone(), 0, baseline);
    let mut history = History { meta, records: Vec::new() };
    let mut epochs_run = 0;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        let (mut loss, mut l_a, mut l_b, mut reg, mut r_s) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut r_o, mut n_o) = (0.0, 0usize);
        for (b, batch) in batches(train, config.batch_size, config.seed, epoch as u64).iter().enumerate() {
            let steps: Vec<InstanceStep> = batch
                .members
                .par_iter()
                .enumerate()
                .map(|(row, &m)| instance_step(&model, &train[m], batch, row, config, [epoch as u64, b as u64, row as u64]))
                .collect::<Result<_, _>>()?;
            let scale = 1.0 / steps.len() as f64;
            let store = model.store_mut();
            store.zero_grad();
            for s in &steps {
                store.accumulate(&s.grads, scale);
                loss += s.loss;
                l_a += s.l_a;
                l_b += s.l_b;
                reg += s.reg;
                r_s += s.r_s;
                if let Some(v) = s.r_o {
                    r_o += v;
                    n_o += 1;
                }
            }
            adagrad_step(store, &mut state, config.learning_rate, config.adagrad_eps);
        }
        let n = train.len() as f64;
        let eval = evaluate(&model, val, mode)?;
        history.records.push(EpochRecord {
            epoch,
            train_loss: loss / n,
            l_a: l_a / n,
            l_b: l_b / n,
            r_total: reg / n,
            r_s: r_s / n,
            r_o: if n_o > 0 { r_o / n_o as f64 } else { 0.0 },
            val_acc: eval.alsc.accuracy,
            val_f1: eval.alsc.macro_f1,
        });
        log::info!(
            "epoch {epoch}: loss {:.4} val_acc {:.4} val_f1 {:.4}",
            loss / n,
            eval.alsc.accuracy,
            eval.alsc.macro_f1
        );
        if stopper.observe(eval.key()) {
            best = model.clone();
            best_epoch = epoch;
            best_eval = eval;
        } else if stopper.should_stop() {
            log::info!("no improvement for {} epochs; stopping", config.patience);
            break;
        }
    }
    history.meta.push(("best_epoch".into(), best_epoch.to_string()));
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_eval,
        last: model,
        history,
        fingerprint: derive_seed(config.seed, &[0xf1, best_epoch as u64]),
        epochs_run,
    })
}
