use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::training::History;

use super::EvalError;

/// Runs sharing one evaluation mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGroup {
    pub mode: String,
    pub runs: Vec<(String, History)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub groups: Vec<ModeGroup>,
    /// human-readable notes, e.g. about runs split by mode
    pub flags: Vec<String>,
}

/// Groups named histories by evaluation mode. Runs with different modes are
/// never put in the same table; a flag records the split.
pub fn compare_runs(runs: Vec<(String, History)>) -> Result<Comparison, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut groups: Vec<ModeGroup> = Vec::new();
    for (name, history) in runs {
        let mode = history.meta("mode").unwrap_or("unknown").to_string();
        match groups.iter_mut().find(|g| g.mode == mode) {
            Some(g) => g.runs.push((name, history)),
            None => groups.push(ModeGroup { mode, runs: vec![(name, history)] }),
        }
    }
    let mut flags = Vec::new();
    if groups.len() > 1 {
        for g in &groups {
            let names: Vec<&str> = g.runs.iter().map(|(n, _)| n.as_str()).collect();
            flags.push(format!("mode {}: {} (compared separately)", g.mode, names.join(", ")));
        }
    }
    Ok(Comparison { groups, flags })
}

impl ModeGroup {
    /// One row per run: best validation epoch and final regularizer values.
    pub fn table_tsv(&self) -> String {
        let mut out = String::from("run\tvariant\tmode\tepochs\tbest_epoch\tval_acc\tval_f1\tR_s_final\tR_o_final\n");
        for (name, h) in &self.runs {
            let recorded = h.meta("best_epoch").and_then(|e| e.parse::<usize>().ok());
            let best = match recorded {
                Some(e) => h.records.iter().find(|r| r.epoch == e),
                None => h.records.iter().fold(None, |best: Option<&crate::training::EpochRecord>, r| match best {
                    Some(b) if (b.val_acc, b.val_f1) >= (r.val_acc, r.val_f1) => Some(b),
                    _ => Some(r),
                }),
            };
            let best_epoch = recorded.or(best.map(|b| b.epoch));
            let last = h.records.last();
            let cell = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                h.meta("variant").unwrap_or("custom"),
                self.mode,
                h.records.len(),
                best_epoch.map_or_else(String::new, |e| e.to_string()),
                cell(best.map(|b| b.val_acc)),
                cell(best.map(|b| b.val_f1)),
                cell(last.map(|r| r.r_s)),
                cell(last.map(|r| r.r_o)),
            );
        }
        out
    }

    /// Per-epoch values of `column` with one column per run; epochs a run
    /// did not reach are left blank.
    pub fn series_tsv(&self, column: &str) -> Result<String, EvalError> {
        let mut epochs = BTreeSet::new();
        let mut series = Vec::with_capacity(self.runs.len());
        for (name, h) in &self.runs {
            let values = h.column(column).ok_or_else(|| EvalError::Mismatch(format!("history has no column `{column}`")))?;
            let pairs: Vec<(usize, f64)> = h.records.iter().map(|r| r.epoch).zip(values).collect();
            epochs.extend(pairs.iter().map(|p| p.0));
            series.push((name, pairs));
        }
        let mut out = String::from("epoch");
        for (name, _) in &series {
            let _ = write!(out, "\t{name}");
        }
        out.push('\n');
        for e in epochs {
            let _ = write!(out, "{e}");
            for (_, pairs) in &series {
                match pairs.iter().find(|p| p.0 == e) {
                    Some((_, v)) => {
                        let _ = write!(out, "\t{v:.6}");
                    }
                    None => out.push('\t'),
                }
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Trailing moving average: entry `i` is the mean of the last `window`
/// values up to and including `i` (fewer at the start).
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be positive");
    (0..values.len())
        .map(|i| {
            let start = (i + 1).saturating_sub(window);
            let part = &values[start..=i];
            part.iter().sum::<f64>() / part.len() as f64
        })
        .collect()
}
