use serde::{Deserialize, Serialize};

use super::{AspectMention, CorpusError, Instance, Overlap, Polarity, Sentence};

/// One line of the canonical instance dump.
#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    tokens: Vec<String>,
    mentions: Vec<(String, Polarity)>,
    overlap: Overlap,
}

/// Serializes instances as JSON lines in input order.
pub fn write_dump(instances: &[Instance]) -> String {
    let mut out = String::new();
    for inst in instances {
        let rec = Record {
            id: inst.sentence.id.clone(),
            text: inst.sentence.raw_text.clone(),
            tokens: inst.sentence.tokens.clone(),
            mentions: inst.mentions.iter().map(|m| (m.category.clone(), m.polarity)).collect(),
            overlap: inst.overlap,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record is serializable"));
        out.push('\n');
    }
    out
}

pub fn read_dump(text: &str, source: &str) -> Result<Vec<Instance>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Line { path: source.to_string(), line: i + 1, message };
        let rec: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let inst = Instance {
            sentence: Sentence { id: rec.id, tokens: rec.tokens, raw_text: rec.text },
            mentions: rec.mentions.into_iter().map(|(category, polarity)| AspectMention { category, polarity }).collect(),
            overlap: rec.overlap,
        };
        inst.validate().map_err(|e| err(e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}
