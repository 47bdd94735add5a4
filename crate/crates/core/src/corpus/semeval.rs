use std::collections::BTreeMap;

use roxmltree::{Document, Node};

use super::{tokenize, AspectMention, CorpusError, Instance, Polarity, Sentence};

const CONFLICT: &str = "conflict";

/// Reads a SemEval-2014 restaurant file (`sentences/sentence/aspectCategories`).
///
/// Conflict mentions are dropped, and sentences left without mentions are
/// dropped with them.
pub fn parse_semeval14(xml: &str) -> Result<Vec<Instance>, CorpusError> {
    let doc = Document::parse(xml).map_err(|e| CorpusError::Xml(e.to_string()))?;
    let mut out = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("sentence")) {
        let (id, text) = sentence_header(node)?;
        let mut raw = Vec::new();
        for cat in node.descendants().filter(|n| n.has_tag_name("aspectCategory")) {
            raw.push(read_mention(cat, &id)?);
        }
        if let Some(inst) = assemble(id, text, raw)? {
            out.push(inst);
        }
    }
    Ok(out)
}

/// Reads a SemEval-2015 restaurant file (`Reviews/.../Opinions/Opinion`).
///
/// `ENTITY#ATTRIBUTE` labels are kept verbatim. Repeated opinions on one
/// category collapse to their majority polarity; ties drop the category.
pub fn parse_semeval15(xml: &str) -> Result<Vec<Instance>, CorpusError> {
    let doc = Document::parse(xml).map_err(|e| CorpusError::Xml(e.to_string()))?;
    let mut out = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("sentence")) {
        let (id, text) = sentence_header(node)?;
        let mut raw = Vec::new();
        for op in node.descendants().filter(|n| n.has_tag_name("Opinion")) {
            raw.push(read_mention(op, &id)?);
        }
        if let Some(inst) = assemble(id, text, raw)? {
            out.push(inst);
        }
    }
    Ok(out)
}

fn sentence_header(node: Node<'_, '_>) -> Result<(String, String), CorpusError> {
    let id = node
        .attribute("id")
        .ok_or(CorpusError::MissingAttribute { sentence: "?".into(), attribute: "id" })?
        .to_string();
    let text = node
        .children()
        .find(|n| n.has_tag_name("text"))
        .and_then(|n| n.text())
        .unwrap_or("")
        .to_string();
    Ok((id, text))
}

/// `None` polarity marks a conflict mention.
fn read_mention(node: Node<'_, '_>, id: &str) -> Result<(String, Option<Polarity>), CorpusError> {
    let category = node
        .attribute("category")
        .ok_or_else(|| CorpusError::MissingAttribute { sentence: id.into(), attribute: "category" })?;
    let polarity = node
        .attribute("polarity")
        .ok_or_else(|| CorpusError::MissingAttribute { sentence: id.into(), attribute: "polarity" })?;
    if polarity == CONFLICT {
        return Ok((category.to_string(), None));
    }
    let p = polarity
        .parse()
        .map_err(|value| CorpusError::UnknownPolarity { sentence: id.into(), value })?;
    Ok((category.to_string(), Some(p)))
}

fn assemble(id: String, text: String, raw: Vec<(String, Option<Polarity>)>) -> Result<Option<Instance>, CorpusError> {
    let mentions = collapse(raw);
    let tokens = tokenize(&text);
    if mentions.is_empty() || tokens.is_empty() {
        return Ok(None);
    }
    Instance::new(Sentence { id, tokens, raw_text: text }, mentions).map(Some)
}

/// Drops conflict mentions, then merges repeats of a category by majority
/// vote. Categories keep their first-appearance order.
fn collapse(raw: Vec<(String, Option<Polarity>)>) -> Vec<AspectMention> {
    let mut order: Vec<String> = Vec::new();
    let mut votes: BTreeMap<String, BTreeMap<Polarity, usize>> = BTreeMap::new();
    for (category, polarity) in raw {
        let Some(p) = polarity else { continue };
        if !votes.contains_key(&category) {
            order.push(category.clone());
        }
        *votes.entry(category).or_default().entry(p).or_default() += 1;
    }
    order
        .into_iter()
        .filter_map(|category| {
            let counts = &votes[&category];
            let best = counts.values().copied().max()?;
            let mut winners = counts.iter().filter(|(_, &n)| n == best);
            let (&polarity, _) = winners.next()?;
            if winners.next().is_some() {
                return None;
            }
            Some(AspectMention { category, polarity })
        })
        .collect()
}
