//! Loader for the WikiEvents release: one document per line plus a parallel
//! coreference file keyed by `doc_key`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{informative_mention, ArgumentRef, CorefCluster, Document, EntityMention, EventMention, MentionLevel};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::ontology::EventOntology;
use crate::span::Span;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WikiDocRecord {
    pub doc_id: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    /// Each sentence is `[[token, char_start, char_end], ...]` followed by the sentence text.
    #[serde(default)]
    pub sentences: Vec<Value>,
    #[serde(default)]
    pub entity_mentions: Vec<WikiEntity>,
    #[serde(default)]
    pub event_mentions: Vec<WikiEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WikiEntity {
    pub id: String,
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub entity_type: String,
    #[serde(default)]
    pub mention_type: Option<String>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub head: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WikiTrigger {
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WikiArgument {
    pub entity_id: String,
    pub role: String,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WikiEvent {
    pub id: String,
    pub event_type: String,
    pub trigger: WikiTrigger,
    #[serde(default)]
    pub arguments: Vec<WikiArgument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WikiCorefRecord {
    pub doc_key: String,
    #[serde(default)]
    pub clusters: Vec<Vec<String>>,
    #[serde(default)]
    pub informative_mentions: Vec<String>,
}

fn sentence_lengths(record: &WikiDocRecord) -> Result<Vec<Vec<String>>> {
    record
        .sentences
        .iter()
        .map(|s| {
            // Either `[[tok, s, e], ...], text]` or a bare list of token strings.
            let toks = match s {
                Value::Array(parts) if matches!(parts.first(), Some(Value::Array(_))) => &parts[0],
                other => other,
            };
            let arr = toks
                .as_array()
                .ok_or_else(|| Error::Document { doc_id: record.doc_id.clone(), message: "sentence is not a token list".into() })?;
            Ok(arr
                .iter()
                .map(|t| match t {
                    Value::Array(tt) => tt.first().and_then(Value::as_str).unwrap_or_default().to_string(),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect())
        })
        .collect()
}

/// Converts one released record (and its coreference entry, if any) into a `Document`.
pub fn wiki_record_to_document(record: &WikiDocRecord, coref: Option<&WikiCorefRecord>) -> Result<Document> {
    let doc_err = |message: String| Error::Document { doc_id: record.doc_id.clone(), message };
    let sentences = sentence_lengths(record)?;
    let tokens: Vec<String> = if record.tokens.is_empty() { sentences.iter().flatten().cloned().collect() } else { record.tokens.clone() };
    let mut boundaries = Vec::with_capacity(sentences.len());
    let mut at = 0;
    for s in &sentences {
        boundaries.push(Span::new(at, at + s.len()));
        at += s.len();
    }
    if sentences.is_empty() {
        boundaries.push(Span::new(0, tokens.len()));
    } else if at != tokens.len() {
        return Err(doc_err(format!("sentences hold {at} tokens, document has {}", tokens.len())));
    }

    let n = tokens.len();
    let mut mentions = Vec::with_capacity(record.entity_mentions.len());
    for e in &record.entity_mentions {
        if e.start >= e.end || e.end > n {
            return Err(doc_err(format!("entity {} offsets [{}, {}) out of range", e.id, e.start, e.end)));
        }
        let span = Span::new(e.start, e.end);
        let head_span = match e.head {
            Some([s, t]) if s < t && span.contains(&Span::new(s, t)) => Span::new(s, t),
            _ => span.last_token(),
        };
        mentions.push(EntityMention {
            mention_id: e.id.clone(),
            span,
            head_span,
            mention_level: e.mention_type.as_deref().map_or(MentionLevel::Nominal, MentionLevel::from_label),
            entity_type: e.entity_type.clone(),
            text: tokens[span.start..span.end].join(" "),
        });
    }

    let mut events = Vec::with_capacity(record.event_mentions.len());
    for ev in &record.event_mentions {
        if ev.trigger.start >= ev.trigger.end || ev.trigger.end > n {
            return Err(doc_err(format!("event {} trigger out of range", ev.id)));
        }
        events.push(EventMention {
            event_id: ev.id.clone(),
            event_type: ev.event_type.clone(),
            trigger_span: Span::new(ev.trigger.start, ev.trigger.end),
            arguments: ev.arguments.iter().map(|a| ArgumentRef { role: a.role.clone(), mention_id: a.entity_id.clone() }).collect(),
        });
    }

    let mut doc = Document {
        doc_id: record.doc_id.clone(),
        tokens,
        sentence_boundaries: boundaries,
        entity_mentions: mentions,
        event_mentions: events,
        coref_clusters: Vec::new(),
    };

    if let Some(coref) = coref {
        let index: HashMap<&str, &EntityMention> = doc.mention_index();
        let mut clusters = Vec::new();
        for (ci, ids) in coref.clusters.iter().enumerate() {
            let members: Vec<String> = ids.iter().filter(|id| index.contains_key(id.as_str())).cloned().collect();
            if members.len() != ids.len() {
                log::warn!("{}: coref cluster {ci} refers to unknown mentions", doc.doc_id);
            }
            if members.is_empty() {
                continue;
            }
            let mut cluster =
                CorefCluster { cluster_id: format!("{}-c{ci}", doc.doc_id), mention_ids: members, informative_mention_id: String::new() };
            // Prefer the released choice when it names a member; otherwise rank.
            let released = coref
                .informative_mentions
                .get(ci)
                .and_then(|text| cluster.mention_ids.iter().find(|id| index[id.as_str()].text.eq_ignore_ascii_case(text.trim())).cloned());
            cluster.informative_mention_id = match released {
                Some(id) => id,
                None => informative_mention(&cluster, &index)?.mention_id.clone(),
            };
            clusters.push(cluster);
        }
        doc.coref_clusters = dedupe_clusters(clusters);
    }
    doc.ensure_singleton_clusters();
    doc.validate()?;
    Ok(doc)
}

// Clusters must be disjoint; a mention listed twice stays with its first cluster.
fn dedupe_clusters(clusters: Vec<CorefCluster>) -> Vec<CorefCluster> {
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for mut c in clusters {
        c.mention_ids.retain(|m| !owner.contains_key(m));
        if c.mention_ids.is_empty() {
            continue;
        }
        if !c.mention_ids.contains(&c.informative_mention_id) {
            c.informative_mention_id = c.mention_ids[0].clone();
        }
        for m in &c.mention_ids {
            owner.insert(m.clone(), out.len());
        }
        out.push(c);
    }
    out
}

/// Inverse of [`wiki_record_to_document`]: the release layout for one document.
pub fn document_to_wiki_records(doc: &Document) -> (WikiDocRecord, WikiCorefRecord) {
    let mut offset = 0;
    let sentences = doc
        .sentence_boundaries
        .iter()
        .map(|s| {
            let mut toks = Vec::new();
            for t in &doc.tokens[s.start..s.end] {
                toks.push(serde_json::json!([t, offset, offset + t.len()]));
                offset += t.len() + 1;
            }
            Value::Array(vec![Value::Array(toks), Value::String(doc.text_of(*s))])
        })
        .collect();
    let level = |l: MentionLevel| match l {
        MentionLevel::Name => "NAM",
        MentionLevel::Nominal => "NOM",
        MentionLevel::Pronoun => "PRO",
    };
    let record = WikiDocRecord {
        doc_id: doc.doc_id.clone(),
        tokens: doc.tokens.clone(),
        sentences,
        entity_mentions: doc
            .entity_mentions
            .iter()
            .map(|m| WikiEntity {
                id: m.mention_id.clone(),
                start: m.span.start,
                end: m.span.end,
                entity_type: m.entity_type.clone(),
                mention_type: Some(level(m.mention_level).into()),
                text: m.text.clone(),
                head: Some([m.head_span.start, m.head_span.end]),
            })
            .collect(),
        event_mentions: doc
            .event_mentions
            .iter()
            .map(|e| WikiEvent {
                id: e.event_id.clone(),
                event_type: e.event_type.clone(),
                trigger: WikiTrigger { start: e.trigger_span.start, end: e.trigger_span.end, text: doc.text_of(e.trigger_span) },
                arguments: e
                    .arguments
                    .iter()
                    .map(|a| WikiArgument {
                        entity_id: a.mention_id.clone(),
                        role: a.role.clone(),
                        text: doc.mention(&a.mention_id).map(|m| m.text.clone()).unwrap_or_default(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let coref = WikiCorefRecord {
        doc_key: doc.doc_id.clone(),
        clusters: doc.coref_clusters.iter().filter(|c| c.mention_ids.len() > 1).map(|c| c.mention_ids.clone()).collect(),
        informative_mentions: doc
            .coref_clusters
            .iter()
            .filter(|c| c.mention_ids.len() > 1)
            .map(|c| doc.mention(&c.informative_mention_id).map(|m| m.text.clone()).unwrap_or_default())
            .collect(),
    };
    (record, coref)
}

/// Writes documents as a WikiEvents split plus its coreference file.
pub fn write_wikievents(docs: &[Document], path: impl AsRef<Path>, coref_path: impl AsRef<Path>) -> Result<()> {
    let (records, corefs): (Vec<_>, Vec<_>) = docs.iter().map(document_to_wiki_records).unzip();
    jsonl::write(path, &records)?;
    jsonl::write(coref_path, &corefs)
}

/// Loads a WikiEvents split. `coref_path` points at the matching `coref/*.jsonlines`
/// file; without it every mention is its own cluster.
pub fn load_wikievents(path: impl AsRef<Path>, coref_path: Option<&Path>, ontology: Option<&EventOntology>) -> Result<Vec<Document>> {
    let records: Vec<WikiDocRecord> = jsonl::read(path)?;
    let coref: HashMap<String, WikiCorefRecord> = match coref_path {
        Some(p) => jsonl::read::<WikiCorefRecord>(p)?.into_iter().map(|r| (r.doc_key.clone(), r)).collect(),
        None => HashMap::new(),
    };
    records
        .iter()
        .map(|r| {
            let doc = wiki_record_to_document(r, coref.get(&r.doc_id))?;
            if let Some(o) = ontology {
                doc.check_against(o);
            }
            Ok(doc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const RECORD: &str = r#"{"doc_id": "wiki_1", "tokens": ["Dennehy", "reserved", "the", "truck", ".", "He", "paid", "$280.32", "."],
      "sentences": [[[["Dennehy",0,7],["reserved",8,16],["the",17,20],["truck",21,26],[".",26,27]], "Dennehy reserved the truck."],
                    [[["He",28,30],["paid",31,35],["$280.32",36,43],[".",43,44]], "He paid $280.32."]],
      "entity_mentions": [
        {"id": "ent1", "start": 0, "end": 1, "entity_type": "PER", "mention_type": "NAM", "text": "Dennehy"},
        {"id": "ent2", "start": 3, "end": 4, "entity_type": "VEH", "text": "truck"},
        {"id": "ent3", "start": 5, "end": 6, "entity_type": "PER", "mention_type": "PRO", "text": "He"},
        {"id": "ent4", "start": 7, "end": 8, "entity_type": "MON", "mention_type": "UNK", "text": "$280.32"}],
      "event_mentions": [{"id": "ev1", "event_type": "Transaction.ExchangeBuySell.Unspecified",
        "trigger": {"start": 1, "end": 2, "text": "reserved"},
        "arguments": [{"entity_id": "ent1", "role": "Giver", "text": "Dennehy"},
                      {"entity_id": "ent2", "role": "AcquiredEntity", "text": "truck"},
                      {"entity_id": "ent4", "role": "PaymentBarter", "text": "$280.32"}]}]}"#;

    const COREF: &str = r#"{"doc_key": "wiki_1", "clusters": [["ent1", "ent3"]], "informative_mentions": ["Dennehy"]}"#;

    #[test]
    fn converts_record_with_coref() {
        let rec: WikiDocRecord = serde_json::from_str(RECORD).unwrap();
        let coref: WikiCorefRecord = serde_json::from_str(COREF).unwrap();
        let doc = wiki_record_to_document(&rec, Some(&coref)).unwrap();
        assert_eq!(doc.sentence_boundaries, vec![Span::new(0, 5), Span::new(5, 9)]);
        assert_eq!(doc.coref_clusters.len(), 3);
        let c = doc.cluster_of("ent3").unwrap();
        assert_eq!(c.informative_mention_id, "ent1");
        assert_eq!(doc.mention("ent2").unwrap().mention_level, MentionLevel::Nominal);
        assert_eq!(doc.mention("ent3").unwrap().mention_level, MentionLevel::Pronoun);
    }

    #[test]
    fn export_round_trips() {
        let rec: WikiDocRecord = serde_json::from_str(RECORD).unwrap();
        let coref: WikiCorefRecord = serde_json::from_str(COREF).unwrap();
        let doc = wiki_record_to_document(&rec, Some(&coref)).unwrap();
        let (r2, c2) = document_to_wiki_records(&doc);
        assert_eq!(wiki_record_to_document(&r2, Some(&c2)).unwrap(), doc);
    }

    #[test]
    fn out_of_range_names_doc() {
        let mut rec: WikiDocRecord = serde_json::from_str(RECORD).unwrap();
        rec.entity_mentions[0].end = 99;
        let err = wiki_record_to_document(&rec, None).unwrap_err();
        assert!(err.to_string().contains("wiki_1"));
    }

    #[test]
    fn empty_file_gives_no_documents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(load_wikievents(&p, None, None).unwrap().is_empty());
    }
}
