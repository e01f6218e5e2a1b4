//! Loader for RAMS v1.0: each record is a five-sentence window around one trigger.
//! Offsets in the release are inclusive on both ends.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ArgumentRef, Document, EntityMention, EventMention, MentionLevel};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::ontology::EventOntology;
use crate::span::Span;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamsRecord {
    pub doc_key: String,
    pub sentences: Vec<Vec<String>>,
    /// `[start, end, [[event_type, confidence]]]`
    #[serde(default)]
    pub evt_triggers: Vec<Value>,
    /// `[[trigger_start, trigger_end], [arg_start, arg_end], role_label]`
    #[serde(default)]
    pub gold_evt_links: Vec<(Span2, Span2, String)>,
}

pub type Span2 = [usize; 2];

/// Strips the `evtNNNargNN` prefix RAMS puts on role labels.
fn role_name(label: &str) -> String {
    let rest = label.strip_prefix("evt").unwrap_or(label);
    let rest = rest.trim_start_matches(|c: char| c.is_ascii_digit());
    match rest.strip_prefix("arg") {
        Some(r) => r.trim_start_matches(|c: char| c.is_ascii_digit()).to_string(),
        None => label.to_string(),
    }
}

pub fn rams_record_to_document(rec: &RamsRecord) -> Result<Document> {
    let fail = |message: String| Error::Document { doc_id: rec.doc_key.clone(), message };
    let tokens: Vec<String> = rec.sentences.iter().flatten().cloned().collect();
    let n = tokens.len();
    let mut boundaries = Vec::new();
    let mut at = 0;
    for s in &rec.sentences {
        boundaries.push(Span::new(at, at + s.len()));
        at += s.len();
    }
    let to_span = |[s, e]: Span2| -> Result<Span> {
        if s > e || e >= n {
            return Err(fail(format!("offsets [{s}, {e}] out of range for {n} tokens")));
        }
        Ok(Span::new(s, e + 1))
    };

    let trig = rec.evt_triggers.first().and_then(Value::as_array).ok_or_else(|| fail("record has no trigger".into()))?;
    let trig_start = trig.first().and_then(Value::as_u64).ok_or_else(|| fail("bad trigger".into()))? as usize;
    let trig_end = trig.get(1).and_then(Value::as_u64).ok_or_else(|| fail("bad trigger".into()))? as usize;
    let event_type = trig
        .get(2)
        .and_then(|v| v.get(0))
        .and_then(|v| v.get(0))
        .and_then(Value::as_str)
        .ok_or_else(|| fail("trigger has no event type".into()))?
        .to_string();
    let trigger_span = to_span([trig_start, trig_end])?;

    let mut mentions: BTreeMap<Span, EntityMention> = BTreeMap::new();
    let mut arguments = Vec::new();
    for (_, arg, label) in &rec.gold_evt_links {
        let span = to_span(*arg)?;
        let m = mentions.entry(span).or_insert_with(|| EntityMention {
            mention_id: format!("{}-{}-{}", rec.doc_key, span.start, span.end),
            span,
            head_span: span.last_token(),
            mention_level: MentionLevel::Nominal,
            entity_type: "UNK".into(),
            text: tokens[span.start..span.end].join(" "),
        });
        arguments.push(ArgumentRef { role: role_name(label), mention_id: m.mention_id.clone() });
    }

    let mut doc = Document {
        doc_id: rec.doc_key.clone(),
        tokens,
        sentence_boundaries: boundaries,
        entity_mentions: mentions.into_values().collect(),
        event_mentions: vec![EventMention { event_id: format!("{}-evt", rec.doc_key), event_type, trigger_span, arguments }],
        coref_clusters: Vec::new(),
    };
    doc.ensure_singleton_clusters();
    doc.validate()?;
    Ok(doc)
}

pub fn load_rams(path: impl AsRef<Path>, ontology: Option<&EventOntology>) -> Result<Vec<Document>> {
    let records: Vec<RamsRecord> = jsonl::read(path)?;
    records
        .iter()
        .map(|r| {
            let d = rams_record_to_document(r)?;
            if let Some(o) = ontology {
                d.check_against(o);
            }
            Ok(d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RECORD: &str = r#"{"doc_key": "nw_RC1", "sentences": [["The", "army", "shelled", "the", "town", "."], ["Ten", "people", "died", "."]],
        "evt_triggers": [[2, 2, [["conflict.attack.airstrikemissilestrike", 1.0]]]],
        "gold_evt_links": [[[2, 2], [0, 1], "evt089arg01attacker"], [[2, 2], [3, 4], "evt089arg02target"], [[2, 2], [6, 7], "evt089arg03victim"]]}"#;

    #[test]
    fn hand_counted_offsets() {
        let rec: RamsRecord = serde_json::from_str(RECORD).unwrap();
        let doc = rams_record_to_document(&rec).unwrap();
        assert_eq!(doc.tokens.len(), 10);
        assert_eq!(doc.sentence_boundaries, vec![Span::new(0, 6), Span::new(6, 10)]);
        let ev = &doc.event_mentions[0];
        assert_eq!(ev.trigger_span, Span::new(2, 3));
        assert_eq!(ev.event_type, "conflict.attack.airstrikemissilestrike");
        let roles: Vec<&str> = ev.arguments.iter().map(|a| a.role.as_str()).collect();
        assert_eq!(roles, vec!["attacker", "target", "victim"]);
        let victim = doc.mention(&ev.arguments[2].mention_id).unwrap();
        assert_eq!(victim.span, Span::new(6, 8));
        assert_eq!(victim.text, "Ten people");
        assert_eq!(victim.head_span, Span::new(7, 8));
    }

    #[test]
    fn zero_arguments() {
        let rec: RamsRecord = serde_json::from_str(
            r#"{"doc_key": "k", "sentences": [["Talks", "began"]], "evt_triggers": [[1, 1, [["contact.discussion.meet", 1.0]]]], "gold_evt_links": []}"#,
        )
        .unwrap();
        let doc = rams_record_to_document(&rec).unwrap();
        assert_eq!(doc.event_mentions.len(), 1);
        assert!(doc.event_mentions[0].arguments.is_empty());
    }

    #[test]
    fn role_prefix_stripped() {
        assert_eq!(role_name("evt043arg01communicator"), "communicator");
        assert_eq!(role_name("place"), "place");
    }
}
