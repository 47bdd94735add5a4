use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::corpus::{Aspect, Overlap};

use super::params::{AttnIds, Ids};
use super::regularizer::{build_acd_matrix, regularizer_for_instance};
use super::{Architecture, ModelParams, NetworkError};

type Result<T> = std::result::Result<T, AutodiffError>;

/// Floor applied inside every log of the losses.
pub const LOG_FLOOR: f64 = 1e-12;

/// Stochastic layer applied after the embedding and after the encoder.
pub trait Noise {
    fn apply(&mut self, tape: &mut Tape<'_>, x: Var) -> Result<Var>;
}

/// Identity noise, used at inference.
pub struct NoNoise;

impl Noise for NoNoise {
    fn apply(&mut self, _tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        Ok(x)
    }
}

/// One sentence as the network sees it. `mask` marks real tokens and must
/// have the same length as `token_ids`; labels in `aspects` only matter for
/// the loss.
#[derive(Clone, Copy, Debug)]
pub struct InstanceInput<'a> {
    pub token_ids: &'a [usize],
    pub mask: &'a [bool],
    pub aspects: &'a [Aspect],
    pub overlap: Overlap,
}

/// Tape handles of one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub loss: Var,
    pub l_a: Var,
    pub l_b: Option<Var>,
    pub reg: Option<Var>,
    /// one `c`-vector per aspect
    pub alsc_logits: Vec<Var>,
    pub alsc_probs: Vec<Var>,
    /// `K × L`
    pub alsc_attention: Var,
    /// `N`
    pub acd_scores: Option<Var>,
    /// `N × L`
    pub acd_attention: Option<Var>,
}

/// Plain values of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    /// `K × c`
    pub alsc_logits: Tensor,
    /// `K × c`
    pub alsc_probs: Tensor,
    /// `K × L`
    pub alsc_attention: Tensor,
    pub acd_scores: Option<Vec<f64>>,
    /// `N × L`
    pub acd_attention: Option<Tensor>,
    pub reg_value: f64,
    pub loss: f64,
    pub l_a: f64,
    pub l_b: f64,
}

impl Forward {
    pub fn output(&self, tape: &Tape<'_>) -> ForwardOutput {
        let stack = |vars: &[Var]| {
            let rows: Vec<Vec<f64>> = vars.iter().map(|&v| tape.value(v).data().to_vec()).collect();
            Tensor::from_rows(&rows).expect("equal-length rows")
        };
        let scalar = |v: Option<Var>| v.map_or(0.0, |v| tape.value(v).data()[0]);
        ForwardOutput {
            alsc_logits: stack(&self.alsc_logits),
            alsc_probs: stack(&self.alsc_probs),
            alsc_attention: tape.value(self.alsc_attention).clone(),
            acd_scores: self.acd_scores.map(|v| tape.value(v).data().to_vec()),
            acd_attention: self.acd_attention.map(|v| tape.value(v).clone()),
            reg_value: scalar(self.reg),
            loss: scalar(Some(self.loss)),
            l_a: scalar(Some(self.l_a)),
            l_b: scalar(self.l_b),
        }
    }
}

/// Word embeddings of `token_ids` as a `d × L` matrix.
pub fn embed(tape: &mut Tape<'_>, model: &ModelParams, token_ids: &[usize]) -> Result<Var> {
    if token_ids.is_empty() {
        return Err(AutodiffError::Shape("cannot encode an empty sentence".into()));
    }
    let rows = tape.gather(model.ids().words, token_ids)?;
    tape.transpose(rows)
}

/// Aspect embedding `u_n` as a `d`-vector.
pub fn aspect_embedding(tape: &mut Tape<'_>, model: &ModelParams, category: usize) -> Result<Var> {
    let row = tape.gather(model.ids().aspects, &[category])?;
    let d = tape.shape(row)[1];
    tape.reshape(row, &[d])
}

/// Runs the LSTM over the columns of `x` (`in × L`) from zero states and
/// returns the hidden states as columns of a `d × L` matrix.
pub fn encode(tape: &mut Tape<'_>, model: &ModelParams, x: Var) -> Result<Var> {
    let ids = model.ids();
    let d = model.config().hidden;
    let (_, len) = tape.value(x).dims2()?;
    let w_ih = tape.param(ids.w_ih);
    let w_hh = tape.param(ids.w_hh);
    let bias = tape.param(ids.bias);
    let projected = tape.matmul(w_ih, x)?;
    let bias = tape.repeat_concat(bias, len)?;
    let pre = tape.add(projected, bias)?;
    let mut h = tape.constant(Tensor::zeros(&[d]));
    let mut c = tape.constant(Tensor::zeros(&[d]));
    let mut states = Vec::with_capacity(len);
    for t in 0..len {
        let xt = tape.column(pre, t)?;
        let rec = tape.matmul(w_hh, h)?;
        let z = tape.add(xt, rec)?;
        let zi = tape.slice(z, 0, d)?;
        let zf = tape.slice(z, d, d)?;
        let zg = tape.slice(z, 2 * d, d)?;
        let zo = tape.slice(z, 3 * d, d)?;
        let i = tape.sigmoid(zi);
        let f = tape.sigmoid(zf);
        let g = tape.tanh(zg);
        let o = tape.sigmoid(zo);
        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, g)?;
        c = tape.add(keep, write)?;
        let tc = tape.tanh(c);
        h = tape.mul(o, tc)?;
        states.push(h);
    }
    tape.stack_columns(&states)
}

/// `W_h H`, shared by every attention row over the same encoding.
fn project_states(tape: &mut Tape<'_>, attn: AttnIds, h: Var) -> Result<Var> {
    let w_h = tape.param(attn.w_h);
    tape.matmul(w_h, h)
}

fn attend(tape: &mut Tape<'_>, attn: AttnIds, wh: Var, u: Var, mask: &[bool]) -> Result<Var> {
    let (d, len) = tape.value(wh).dims2()?;
    if mask.len() != len {
        return Err(AutodiffError::Shape(format!("mask of length {} for {len} positions", mask.len())));
    }
    let w_u = tape.param(attn.w_u);
    let wu = tape.matmul(w_u, u)?;
    let wu = tape.repeat_concat(wu, len)?;
    let pre = tape.add(wh, wu)?;
    let act = tape.tanh(pre);
    let z = tape.param(attn.z);
    let z = tape.reshape(z, &[1, d])?;
    let scores = tape.matmul(z, act)?;
    let scores = tape.reshape(scores, &[len])?;
    tape.masked_softmax(scores, mask)
}

fn alsc_ids(ids: &Ids) -> std::result::Result<AttnIds, NetworkError> {
    ids.alsc.ok_or_else(|| NetworkError::Config("lstm-avg has no aspect attention".into()))
}

fn acd_ids(ids: &Ids) -> std::result::Result<AttnIds, NetworkError> {
    ids.acd.ok_or_else(|| NetworkError::Config("category detection needs a multi-task model".into()))
}

/// Sentiment attention `α` of `category` over `h` (`d × L`).
pub fn alsc_attention(
    tape: &mut Tape<'_>,
    model: &ModelParams,
    h: Var,
    category: usize,
    mask: &[bool],
) -> std::result::Result<Var, NetworkError> {
    let attn = alsc_ids(model.ids())?;
    let wh = project_states(tape, attn, h)?;
    let u = aspect_embedding(tape, model, category)?;
    Ok(attend(tape, attn, wh, u, mask)?)
}

/// Detection attention `β` of `category` over `h`; its own parameter set.
pub fn acd_attention(
    tape: &mut Tape<'_>,
    model: &ModelParams,
    h: Var,
    category: usize,
    mask: &[bool],
) -> std::result::Result<Var, NetworkError> {
    let attn = acd_ids(model.ids())?;
    let wh = project_states(tape, attn, h)?;
    let u = aspect_embedding(tape, model, category)?;
    Ok(attend(tape, attn, wh, u, mask)?)
}

/// `r = tanh(W_att H α + W_last h_last)`.
pub fn alsc_represent(
    tape: &mut Tape<'_>,
    model: &ModelParams,
    h: Var,
    alpha: Var,
    last: usize,
) -> std::result::Result<Var, NetworkError> {
    let (w_att, w_last) =
        model.ids().repr.ok_or_else(|| NetworkError::Config("lstm-avg has no attention representation".into()))?;
    let pooled = tape.matmul(h, alpha)?;
    let h_last = tape.column(h, last)?;
    let w_att = tape.param(w_att);
    let w_last = tape.param(w_last);
    let a = tape.matmul(w_att, pooled)?;
    let b = tape.matmul(w_last, h_last)?;
    let sum = tape.add(a, b)?;
    Ok(tape.tanh(sum))
}

/// Sentiment logits `W r + b` (`c`-vector); the prediction is their softmax.
pub fn alsc_logits(tape: &mut Tape<'_>, model: &ModelParams, r: Var) -> Result<Var> {
    let (w, b) = model.ids().alsc_head;
    let w = tape.param(w);
    let b = tape.param(b);
    let wr = tape.matmul(w, r)?;
    tape.add(wr, b)
}

pub fn alsc_predict(tape: &mut Tape<'_>, model: &ModelParams, r: Var) -> Result<Var> {
    let logits = alsc_logits(tape, model, r)?;
    tape.softmax(logits)
}

/// Detection scores `sigmoid(w · H βₙ + b)` for the rows of `betas` (`N × L`).
pub fn acd_predict(
    tape: &mut Tape<'_>,
    model: &ModelParams,
    h: Var,
    betas: Var,
) -> std::result::Result<Var, NetworkError> {
    let (w, b) = model.ids().acd_head.ok_or_else(|| NetworkError::Config("category detection needs a multi-task model".into()))?;
    let n = tape.shape(betas)[0];
    let bt = tape.transpose(betas)?;
    let pooled = tape.matmul(h, bt)?;
    let w = tape.param(w);
    let b = tape.param(b);
    let logits = tape.matmul(w, pooled)?;
    let bias = tape.repeat_concat(b, n)?;
    let logits = tape.add(logits, bias)?;
    let scores = tape.sigmoid(logits);
    Ok(tape.reshape(scores, &[n])?)
}

/// `−Σ_k log ŷ_k[y_k]` over the aspects' probability vectors.
pub fn alsc_loss(tape: &mut Tape<'_>, probs: &[Var], labels: &[usize]) -> Result<Var> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(AutodiffError::Shape(format!("{} predictions for {} labels", probs.len(), labels.len())));
    }
    let mut picked = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(labels) {
        picked.push(tape.slice(p, y, 1)?);
    }
    let stacked = tape.stack_rows(&picked)?;
    let logs = tape.log_clamped(stacked, LOG_FLOOR);
    let total = tape.sum(logs);
    Ok(tape.scale(total, -1.0))
}

/// Binary cross-entropy summed over all categories.
pub fn acd_loss(tape: &mut Tape<'_>, scores: Var, labels: &[bool]) -> Result<Var> {
    if tape.shape(scores) != [labels.len()] {
        return Err(AutodiffError::Shape(format!("{:?} scores for {} labels", tape.shape(scores), labels.len())));
    }
    let y = tape.constant(Tensor::vector(labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect()));
    let not_y = tape.constant(Tensor::vector(labels.iter().map(|&l| if l { 0.0 } else { 1.0 }).collect()));
    let log_p = tape.log_clamped(scores, LOG_FLOOR);
    let comp = tape.rsub_scalar(1.0, scores);
    let log_q = tape.log_clamped(comp, LOG_FLOOR);
    let a = tape.mul(y, log_p)?;
    let b = tape.mul(not_y, log_q)?;
    let both = tape.add(a, b)?;
    let total = tape.sum(both);
    Ok(tape.scale(total, -1.0))
}

/// `L_a + L_b / N + λ R`. Missing terms count as zero.
pub fn total_loss(
    tape: &mut Tape<'_>,
    l_a: Var,
    l_b: Option<Var>,
    reg: Option<Var>,
    lambda: f64,
    n_categories: usize,
) -> Result<Var> {
    let mut loss = l_a;
    if let Some(l_b) = l_b {
        let scaled = tape.scale(l_b, 1.0 / n_categories as f64);
        loss = tape.add(loss, scaled)?;
    }
    if let Some(r) = reg {
        if lambda != 0.0 {
            let scaled = tape.scale(r, lambda);
            loss = tape.add(loss, scaled)?;
        }
    }
    Ok(loss)
}

/// Full per-sentence pass: predictions, attention, regularizer and loss.
/// `tape` must be built over `model.store()`.
pub fn forward(
    tape: &mut Tape<'_>,
    model: &ModelParams,
    input: &InstanceInput<'_>,
    noise: &mut dyn Noise,
) -> std::result::Result<Forward, NetworkError> {
    let config = model.config();
    let len = input.token_ids.len();
    if input.mask.len() != len {
        return Err(NetworkError::Input(format!("mask has {} entries for {len} tokens", input.mask.len())));
    }
    let last = input.mask.iter().rposition(|&m| m).ok_or_else(|| NetworkError::Input("sentence has no tokens".into()))?;
    if input.aspects.is_empty() {
        return Err(NetworkError::Input("instance has no aspects".into()));
    }
    for a in input.aspects {
        if a.category >= model.n_categories() || a.label >= config.classes {
            return Err(NetworkError::Input(format!("aspect {a:?} out of range")));
        }
    }
    let ids = *model.ids();
    let words = embed(tape, model, input.token_ids)?;
    let words = noise.apply(tape, words)?;

    let mut shared = None;
    let mut alphas = Vec::with_capacity(input.aspects.len());
    let mut logits = Vec::with_capacity(input.aspects.len());
    let mut probs = Vec::with_capacity(input.aspects.len());
    match config.variant {
        Architecture::LstmAvg => {
            let h = encode(tape, model, words)?;
            let h = noise.apply(tape, h)?;
            shared = Some(h);
            let valid = input.mask.iter().filter(|&&m| m).count() as f64;
            let uniform: Vec<f64> = input.mask.iter().map(|&m| if m { 1.0 / valid } else { 0.0 }).collect();
            let alpha = tape.constant(Tensor::vector(uniform));
            let mean = tape.matmul(h, alpha)?;
            let l = alsc_logits(tape, model, mean)?;
            for _ in input.aspects {
                alphas.push(alpha);
                logits.push(l);
                probs.push(tape.softmax(l)?);
            }
        }
        Architecture::At => {
            let h = encode(tape, model, words)?;
            let h = noise.apply(tape, h)?;
            shared = Some(h);
            let attn = alsc_ids(&ids)?;
            let wh = project_states(tape, attn, h)?;
            for a in input.aspects {
                let u = aspect_embedding(tape, model, a.category)?;
                let alpha = attend(tape, attn, wh, u, input.mask)?;
                let r = alsc_represent(tape, model, h, alpha, last)?;
                let l = alsc_logits(tape, model, r)?;
                alphas.push(alpha);
                logits.push(l);
                probs.push(tape.softmax(l)?);
            }
        }
        Architecture::Atae => {
            let attn = alsc_ids(&ids)?;
            for a in input.aspects {
                let u = aspect_embedding(tape, model, a.category)?;
                let tiled = tape.repeat_concat(u, len)?;
                let x = tape.concat_rows(words, tiled)?;
                let h = encode(tape, model, x)?;
                let h = noise.apply(tape, h)?;
                let wh = project_states(tape, attn, h)?;
                let alpha = attend(tape, attn, wh, u, input.mask)?;
                let r = alsc_represent(tape, model, h, alpha, last)?;
                let l = alsc_logits(tape, model, r)?;
                alphas.push(alpha);
                logits.push(l);
                probs.push(tape.softmax(l)?);
            }
        }
    }
    let alsc_attention = tape.stack_rows(&alphas)?;
    let labels: Vec<usize> = input.aspects.iter().map(|a| a.label).collect();
    let l_a = alsc_loss(tape, &probs, &labels)?;

    let (mut acd_scores, mut acd_attention, mut l_b, mut acd_matrix) = (None, None, None, None);
    if config.multi_task {
        let h = shared.expect("multi-task models share one encoding");
        let attn = acd_ids(&ids)?;
        let wh = project_states(tape, attn, h)?;
        let n = model.n_categories();
        let mut betas = Vec::with_capacity(n);
        for category in 0..n {
            let u = aspect_embedding(tape, model, category)?;
            betas.push(attend(tape, attn, wh, u, input.mask)?);
        }
        let stacked = tape.stack_rows(&betas)?;
        let scores = acd_predict(tape, model, h, stacked)?;
        let mut gold = vec![false; n];
        for a in input.aspects {
            gold[a.category] = true;
        }
        l_b = Some(acd_loss(tape, scores, &gold)?);
        if config.reg_acd != super::Regularizer::None {
            let mentioned: Vec<Var> = input.aspects.iter().map(|a| betas[a.category]).collect();
            let unmentioned: Vec<Var> = (0..n).filter(|&c| !gold[c]).map(|c| betas[c]).collect();
            acd_matrix = Some(build_acd_matrix(tape, &mentioned, &unmentioned)?);
        }
        acd_scores = Some(scores);
        acd_attention = Some(stacked);
    }
    let reg = regularizer_for_instance(tape, config, alsc_attention, acd_matrix, input.overlap)?;
    let loss = total_loss(tape, l_a, l_b, reg, config.lambda, model.n_categories())?;
    Ok(Forward {
        loss,
        l_a,
        l_b,
        reg,
        alsc_logits: logits,
        alsc_probs: probs,
        alsc_attention,
        acd_scores,
        acd_attention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamStore;
    use crate::network::{ModelConfig, LSTM_BIAS};

    fn zero_model(name: &str) -> ModelParams {
        ModelParams::zeros(ModelConfig::named(name, 3, 4).unwrap(), 10, 3).unwrap()
    }

    #[test]
    fn zero_encoder_yields_zero_states() {
        let mut model = zero_model("AT-LSTM");
        model.tensor_mut(LSTM_BIAS).unwrap().fill(0.0);
        let mut tape = Tape::new(model.store());
        let x = embed(&mut tape, &model, &[3]).unwrap();
        let h = encode(&mut tape, &model, x).unwrap();
        assert_eq!(tape.value(h).data(), &[0.0; 4]);
    }

    #[test]
    fn zero_attention_is_uniform_and_respects_mask() {
        let model = zero_model("M-AT-LSTM");
        let mut tape = Tape::new(model.store());
        let x = embed(&mut tape, &model, &[1, 2, 3, 4]).unwrap();
        let h = encode(&mut tape, &model, x).unwrap();
        let a = alsc_attention(&mut tape, &model, h, 0, &[true; 4]).unwrap();
        assert_eq!(tape.value(a).data(), &[0.25; 4]);
        let b = acd_attention(&mut tape, &model, h, 1, &[true, true, false, false]).unwrap();
        assert_eq!(tape.value(b).data(), &[0.5, 0.5, 0.0, 0.0]);
        assert!(acd_attention(&mut tape, &model, h, 1, &[false; 4]).is_err());
        let single = zero_model("AT-LSTM");
        let mut tape = Tape::new(single.store());
        let x = embed(&mut tape, &single, &[1]).unwrap();
        let h = encode(&mut tape, &single, x).unwrap();
        assert!(matches!(acd_attention(&mut tape, &single, h, 0, &[true]), Err(NetworkError::Config(_))));
    }

    #[test]
    fn zero_heads_give_uniform_predictions() {
        let model = zero_model("M-AT-LSTM");
        let mut tape = Tape::new(model.store());
        let r = tape.constant(Tensor::vector(vec![0.3, -0.2, 0.1, 0.9]));
        let p = alsc_predict(&mut tape, &model, r).unwrap();
        for &v in tape.value(p).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let x = embed(&mut tape, &model, &[1, 2]).unwrap();
        let h = encode(&mut tape, &model, x).unwrap();
        let betas = tape.constant(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap());
        let s = acd_predict(&mut tape, &model, h, betas).unwrap();
        assert_eq!(tape.value(s).data(), &[0.5, 0.5]);
        let alpha = tape_const(&mut tape, &[0.0, 1.0]);
        let r = alsc_represent(&mut tape, &model, h, alpha, 1).unwrap();
        assert_eq!(tape.value(r).data(), &[0.0; 4]);
    }

    fn tape_const(tape: &mut Tape<'_>, v: &[f64]) -> Var {
        tape.constant(Tensor::vector(v.to_vec()))
    }

    #[test]
    fn loss_closed_forms() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let uniform = tape_const(&mut tape, &[1.0 / 3.0; 3]);
        let l = alsc_loss(&mut tape, &[uniform], &[1]).unwrap();
        assert!((tape.scalar(l).unwrap() - 3f64.ln()).abs() < 1e-12);
        let perfect = tape_const(&mut tape, &[0.0, 1.0, 0.0]);
        let l = alsc_loss(&mut tape, &[perfect], &[1]).unwrap();
        assert_eq!(tape.scalar(l).unwrap(), 0.0);
        let l2 = alsc_loss(&mut tape, &[uniform, perfect], &[0, 1]).unwrap();
        assert!((tape.scalar(l2).unwrap() - 3f64.ln()).abs() < 1e-12);

        let s = tape_const(&mut tape, &[0.25]);
        let l = acd_loss(&mut tape, s, &[true]).unwrap();
        assert!((tape.scalar(l).unwrap() + 0.25f64.ln()).abs() < 1e-12);
        let half = tape_const(&mut tape, &[0.5; 5]);
        let l = acd_loss(&mut tape, half, &[true, false, false, true, false]).unwrap();
        assert!((tape.scalar(l).unwrap() - 5.0 * 2f64.ln()).abs() < 1e-12);
        let exact = tape_const(&mut tape, &[1.0, 0.0]);
        let l = acd_loss(&mut tape, exact, &[true, false]).unwrap();
        assert!(tape.scalar(l).unwrap().abs() < 1e-12);

        let (la, lb, r) = (tape_const(&mut tape, &[1.0]), tape_const(&mut tape, &[5.0]), tape_const(&mut tape, &[2.0]));
        let t = total_loss(&mut tape, la, Some(lb), Some(r), 0.1, 5).unwrap();
        assert!((tape.scalar(t).unwrap() - 2.2).abs() < 1e-12);
        let t = total_loss(&mut tape, la, None, Some(r), 0.0, 5).unwrap();
        assert_eq!(tape.scalar(t).unwrap(), 1.0);
    }

    #[test]
    fn forward_shapes_and_masking() {
        let model = zero_model("M-CAN-2Ro");
        let aspects = [Aspect { category: 0, label: 2 }, Aspect { category: 2, label: 0 }];
        let input = InstanceInput {
            token_ids: &[1, 2, 3, 0, 0],
            mask: &[true, true, true, false, false],
            aspects: &aspects,
            overlap: Overlap::NonOverlapping,
        };
        let mut tape = Tape::new(model.store());
        let out = forward(&mut tape, &model, &input, &mut NoNoise).unwrap().output(&tape);
        assert_eq!(out.alsc_probs.shape(), &[2, 3]);
        assert_eq!(out.alsc_attention.shape(), &[2, 5]);
        assert_eq!(out.acd_attention.as_ref().unwrap().shape(), &[3, 5]);
        assert_eq!(out.acd_scores.as_ref().unwrap().len(), 3);
        for row in 0..2 {
            assert_eq!(&out.alsc_attention.row(row)[3..], &[0.0, 0.0]);
        }
        assert!(out.reg_value >= 0.0);
        let expected = out.l_a + out.l_b / 3.0 + 0.1 * out.reg_value;
        assert!((out.loss - expected).abs() < 1e-12);

        let bad = InstanceInput { mask: &[true], ..input };
        assert!(matches!(forward(&mut tape, &model, &bad, &mut NoNoise), Err(NetworkError::Input(_))));
    }
}
