use std::fmt::Write as _;

use crate::autodiff::{ParamStore, Tensor};

use super::NetworkError;

const MAGIC: &str = "can-checkpoint v1";

/// Versioned text container for named tensors plus free-form metadata and
/// string lists.
///
/// ```text
/// can-checkpoint v1
/// [meta]
/// epoch = 3
/// [list vocab 2]
/// <unk>
/// food
/// [tensor alsc.attn.z trainable 4]
/// 0.001 -0.002 0.0 0.004
/// ```
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so equal parameters always produce equal bytes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamFile {
    pub meta: Vec<(String, String)>,
    pub lists: Vec<(String, Vec<String>)>,
    pub store: ParamStore,
}

impl ParamFile {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn list(&self, name: &str) -> Option<&[String]> {
        self.lists.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push_str("\n[meta]\n");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (name, items) in &self.lists {
            let _ = writeln!(out, "[list {name} {}]", items.len());
            for item in items {
                out.push_str(item);
                out.push('\n');
            }
        }
        for (_, p) in self.store.iter() {
            let shape: Vec<String> = p.value.shape().iter().map(usize::to_string).collect();
            let flag = if p.trainable { "trainable" } else { "frozen" };
            let _ = writeln!(out, "[tensor {} {flag} {}]", p.name, shape.join(" "));
            let width = p.value.shape().last().copied().unwrap_or(1).max(1);
            for row in p.value.data().chunks(width) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self, NetworkError> {
        let mut lines = text.lines().enumerate().peekable();
        let err = |line: usize, message: String| NetworkError::Checkpoint { path: source.to_string(), line: line + 1, message };
        match lines.next() {
            Some((_, MAGIC)) => {}
            Some((i, other)) => return Err(err(i, format!("expected `{MAGIC}`, found `{other}`"))),
            None => return Err(err(0, "empty file".into())),
        }
        match lines.next() {
            Some((_, "[meta]")) => {}
            other => return Err(err(other.map_or(1, |(i, _)| i), "expected `[meta]`".into())),
        }
        let mut file = ParamFile::default();
        while let Some((i, line)) = lines.next_if(|(_, l)| !l.starts_with('[')) {
            let (k, v) = line.split_once(" = ").ok_or_else(|| err(i, format!("malformed meta line `{line}`")))?;
            file.meta.push((k.to_string(), v.to_string()));
        }
        while let Some((i, header)) = lines.next() {
            let inner = header
                .strip_prefix('[')
                .and_then(|h| h.strip_suffix(']'))
                .ok_or_else(|| err(i, format!("expected a section header, found `{header}`")))?;
            let parts: Vec<&str> = inner.split(' ').collect();
            match parts.as_slice() {
                ["list", name, count] => {
                    let count: usize = count.parse().map_err(|_| err(i, format!("bad list length `{count}`")))?;
                    let mut items = Vec::with_capacity(count);
                    for _ in 0..count {
                        let (_, item) = lines.next().ok_or_else(|| err(i, format!("list `{name}` is truncated")))?;
                        items.push(item.to_string());
                    }
                    file.lists.push((name.to_string(), items));
                }
                ["tensor", name, flag, dims @ ..] => {
                    let trainable = match *flag {
                        "trainable" => true,
                        "frozen" => false,
                        other => return Err(err(i, format!("unknown tensor flag `{other}`"))),
                    };
                    let shape: Vec<usize> = dims
                        .iter()
                        .map(|d| d.parse().map_err(|_| err(i, format!("bad dimension `{d}`"))))
                        .collect::<Result<_, _>>()?;
                    let total: usize = shape.iter().product();
                    let width = shape.last().copied().unwrap_or(1).max(1);
                    let mut data = Vec::with_capacity(total);
                    while data.len() < total {
                        let (j, row) = lines.next().ok_or_else(|| err(i, format!("tensor `{name}` is truncated")))?;
                        let before = data.len();
                        for cell in row.split(' ') {
                            data.push(cell.parse::<f64>().map_err(|_| err(j, format!("bad number `{cell}`")))?);
                        }
                        if data.len() - before != width {
                            return Err(err(j, format!("expected {width} values, found {}", data.len() - before)));
                        }
                    }
                    let value = Tensor::new(shape, data).map_err(|e| err(i, e.to_string()))?;
                    file.store.insert(name, value, trainable).map_err(|e| err(i, e.to_string()))?;
                }
                _ => return Err(err(i, format!("unknown section `{header}`"))),
            }
        }
        Ok(file)
    }
}
