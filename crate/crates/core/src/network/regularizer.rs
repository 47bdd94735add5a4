use crate::autodiff::{AutodiffError, ReduceKind, Tape, Tensor, Var};
use crate::corpus::Overlap;

use super::{Gram, ModelConfig, Regularizer};

type Result<T> = std::result::Result<T, AutodiffError>;

/// `|Σ α² − 1|` for one attention row.
pub fn sparse_reg(tape: &mut Tape<'_>, row: Var) -> Result<Var> {
    let sq = tape.square(row);
    let total = tape.sum(sq);
    let shifted = tape.add_scalar(total, -1.0);
    Ok(tape.abs(shifted))
}

/// Frobenius norm of the Gram matrix of `m` (rows × L) minus the identity.
pub fn orthogonal_reg(tape: &mut Tape<'_>, m: Var, gram: Gram) -> Result<Var> {
    let mt = tape.transpose(m)?;
    let product = match gram {
        Gram::Rows => tape.matmul(m, mt)?,
        Gram::Positions => tape.matmul(mt, m)?,
    };
    let n = tape.shape(product)[0];
    let eye = tape.constant(identity(n));
    let diff = tape.sub(product, eye)?;
    let sq = tape.square(diff);
    let total = tape.sum(sq);
    tape.sqrt(total)
}

fn identity(n: usize) -> Tensor {
    let mut t = Tensor::zeros(&[n, n]);
    for i in 0..n {
        t.data_mut()[i * n + i] = 1.0;
    }
    t
}

/// Stacks the mentioned ACD attention rows and appends the mean of the
/// unmentioned ones. With no unmentioned rows only the mentioned rows are kept.
pub fn build_acd_matrix(tape: &mut Tape<'_>, mentioned: &[Var], unmentioned: &[Var]) -> Result<Var> {
    let mut rows = mentioned.to_vec();
    if !unmentioned.is_empty() {
        let stacked = tape.stack_rows(unmentioned)?;
        rows.push(tape.reduce(ReduceKind::Mean, stacked, Some(0))?);
    }
    tape.stack_rows(&rows)
}

/// Regularizer for one attention matrix: orthogonal on non-overlapping
/// multi-row matrices under `Ro`, otherwise the sum of per-row sparse terms.
/// `None` when `reg` is off.
pub fn apply_regularizer(
    tape: &mut Tape<'_>,
    reg: Regularizer,
    gram: Gram,
    matrix: Var,
    overlap: Overlap,
) -> Result<Option<Var>> {
    let rows = tape.shape(matrix)[0];
    match reg {
        Regularizer::None => Ok(None),
        Regularizer::Ro if overlap == Overlap::NonOverlapping && rows >= 2 => orthogonal_reg(tape, matrix, gram).map(Some),
        Regularizer::Rs | Regularizer::Ro => {
            let mut total = None;
            for r in 0..rows {
                let row = tape.row(matrix, r)?;
                let term = sparse_reg(tape, row)?;
                total = Some(match total {
                    None => term,
                    Some(acc) => tape.add(acc, term)?,
                });
            }
            Ok(total)
        }
    }
}

/// The instance's `R`: the ALSC term plus, when configured, the ACD term on `G`.
pub fn regularizer_for_instance(
    tape: &mut Tape<'_>,
    config: &ModelConfig,
    alsc: Var,
    acd: Option<Var>,
    overlap: Overlap,
) -> Result<Option<Var>> {
    let a = apply_regularizer(tape, config.reg_alsc, config.gram, alsc, overlap)?;
    let b = match acd {
        Some(g) => apply_regularizer(tape, config.reg_acd, config.gram, g, overlap)?,
        None => None,
    };
    match (a, b) {
        (Some(a), Some(b)) => tape.add(a, b).map(Some),
        (x, y) => Ok(x.or(y)),
    }
}

/// Plain-value `|Σ α² − 1|`.
pub fn sparse_reg_value(row: &[f64]) -> f64 {
    (row.iter().map(|a| a * a).sum::<f64>() - 1.0).abs()
}

/// Plain-value orthogonal penalty of the stacked `rows`.
pub fn orthogonal_reg_value(rows: &[Vec<f64>], gram: Gram) -> f64 {
    let mut total = 0.0;
    match gram {
        Gram::Rows => {
            for (i, a) in rows.iter().enumerate() {
                for (j, b) in rows.iter().enumerate() {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    let e = dot - if i == j { 1.0 } else { 0.0 };
                    total += e * e;
                }
            }
        }
        Gram::Positions => {
            let l = rows.first().map_or(0, Vec::len);
            for p in 0..l {
                for q in 0..l {
                    let dot: f64 = rows.iter().map(|r| r[p] * r[q]).sum();
                    let e = dot - if p == q { 1.0 } else { 0.0 };
                    total += e * e;
                }
            }
        }
    }
    total.sqrt()
}
