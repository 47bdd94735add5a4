use std::fmt::Write as _;

use super::TrainError;

/// Per-epoch training diagnostics. Loss terms and regularizer components are
/// means over the epoch's training sentences; `r_o` averages only over
/// non-overlapping multi-aspect sentences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub l_a: f64,
    pub l_b: f64,
    pub r_total: f64,
    /// summed sparse penalty of the sentiment attention rows
    pub r_s: f64,
    /// orthogonal penalty of the sentiment attention matrix
    pub r_o: f64,
    pub val_acc: f64,
    pub val_f1: f64,
}

pub const COLUMNS: [&str; 9] =
    ["epoch", "train_loss", "L_a", "L_b", "R_total", "R_s_component", "R_o_component", "val_acc", "val_f1"];

/// Training history: `# key=value` header lines followed by a tab-separated table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub meta: Vec<(String, String)>,
    pub records: Vec<EpochRecord>,
}

impl EpochRecord {
    fn values(&self) -> [f64; 8] {
        [self.train_loss, self.l_a, self.l_b, self.r_total, self.r_s, self.r_o, self.val_acc, self.val_f1]
    }
}

impl History {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Values of a named column in epoch order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = COLUMNS.iter().position(|&c| c == name)?;
        Some(
            self.records
                .iter()
                .map(|r| if idx == 0 { r.epoch as f64 } else { r.values()[idx - 1] })
                .collect(),
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&COLUMNS.join("\t"));
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{}", r.epoch);
            for v in r.values() {
                let _ = write!(out, "\t{v:.8}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str, source: &str) -> Result<Self, TrainError> {
        let err = |line: usize, message: String| TrainError::Format { path: source.to_string(), line: line + 1, message };
        let mut history = History::default();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix("# ") {
                let (k, v) = meta.split_once('=').ok_or_else(|| err(i, format!("malformed header `{line}`")))?;
                history.meta.push((k.to_string(), v.to_string()));
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if !header_seen {
                if cells != COLUMNS {
                    return Err(err(i, format!("expected columns {}", COLUMNS.join(","))));
                }
                header_seen = true;
                continue;
            }
            if cells.len() != COLUMNS.len() {
                return Err(err(i, format!("expected {} fields, found {}", COLUMNS.len(), cells.len())));
            }
            let num = |j: usize| cells[j].parse::<f64>().map_err(|_| err(i, format!("bad number `{}`", cells[j])));
            history.records.push(EpochRecord {
                epoch: cells[0].parse().map_err(|_| err(i, format!("bad epoch `{}`", cells[0])))?,
                train_loss: num(1)?,
                l_a: num(2)?,
                l_b: num(3)?,
                r_total: num(4)?,
                r_s: num(5)?,
                r_o: num(6)?,
                val_acc: num(7)?,
                val_f1: num(8)?,
            });
        }
        if !header_seen {
            return Err(err(0, "missing column header".into()));
        }
        Ok(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let h = History {
            meta: vec![("variant".into(), "AT-CAN-Ro".into()), ("mode".into(), "3way".into())],
            records: vec![
                EpochRecord { epoch: 1, train_loss: 1.25, r_o: 0.5, val_acc: 0.75, ..Default::default() },
                EpochRecord { epoch: 2, train_loss: 0.5, r_s: 0.125, ..Default::default() },
            ],
        };
        let text = h.to_tsv();
        assert!(text.starts_with("# variant=AT-CAN-Ro\n# mode=3way\nepoch\ttrain_loss"));
        assert_eq!(History::from_tsv(&text, "h.tsv").unwrap(), h);
        assert_eq!(h.column("R_o_component").unwrap(), vec![0.5, 0.0]);
        assert_eq!(h.column("epoch").unwrap(), vec![1.0, 2.0]);
        assert!(h.column("bogus").is_none());
        let broken = text.replace("0.75000000", "x");
        assert!(History::from_tsv(&broken, "h.tsv").unwrap_err().to_string().contains("h.tsv:4"));
        assert!(History::from_tsv("", "h.tsv").is_err());
    }
}
