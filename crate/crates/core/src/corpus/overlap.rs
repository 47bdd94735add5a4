use std::collections::{BTreeMap, BTreeSet};

use super::{CorpusError, Instance, Overlap};

/// Sentence id to overlap flag, read from `id<TAB>OL|NOL` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OverlapAnnotations {
    flags: BTreeMap<String, Overlap>,
}

impl OverlapAnnotations {
    pub fn insert(&mut self, id: impl Into<String>, flag: Overlap) {
        self.flags.insert(id.into(), flag);
    }

    pub fn get(&self, id: &str) -> Option<Overlap> {
        self.flags.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, flag) in &self.flags {
            let code = if *flag == Overlap::Overlapping { "OL" } else { "NOL" };
            out.push_str(&format!("{id}\t{code}\n"));
        }
        out
    }
}

/// Parses the sidecar. Blank lines and `#` comments are skipped.
pub fn parse_overlap_annotations(text: &str, source: &str) -> Result<OverlapAnnotations, CorpusError> {
    let mut ann = OverlapAnnotations::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CorpusError::Line { path: source.to_string(), line: i + 1, message };
        let (id, code) = line.split_once('\t').ok_or_else(|| err("expected `id<TAB>OL|NOL`".into()))?;
        let flag = match code.trim() {
            "OL" => Overlap::Overlapping,
            "NOL" => Overlap::NonOverlapping,
            other => return Err(err(format!("unknown overlap code `{other}`"))),
        };
        ann.insert(id.trim(), flag);
    }
    Ok(ann)
}

/// What happened while applying annotations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MergeReport {
    pub applied: usize,
    /// multi-aspect sentences without an annotation (set to non-overlapping)
    pub defaulted: Vec<String>,
    /// annotation ids that match no multi-aspect sentence
    pub unknown: Vec<String>,
}

/// Sets the overlap flag of every multi-aspect instance. Unannotated ones
/// default to non-overlapping; both that and stray annotation ids are
/// warnings, never errors.
pub fn merge_overlap_annotations(instances: &mut [Instance], annotations: &OverlapAnnotations) -> MergeReport {
    let mut report = MergeReport::default();
    let mut used = BTreeSet::new();
    for inst in instances.iter_mut() {
        if !inst.is_multi_aspect() {
            inst.overlap = Overlap::Single;
            continue;
        }
        match annotations.get(inst.id()) {
            Some(flag) => {
                inst.overlap = flag;
                report.applied += 1;
                used.insert(inst.id().to_string());
            }
            None => {
                log::warn!("sentence {} has no overlap annotation; using non-overlapping", inst.id());
                inst.overlap = Overlap::NonOverlapping;
                report.defaulted.push(inst.id().to_string());
            }
        }
    }
    for id in annotations.flags.keys() {
        if !used.contains(id) {
            log::warn!("overlap annotation for unknown or single-aspect sentence {id}");
            report.unknown.push(id.clone());
        }
    }
    report
}
