//! Zero-shot training splits: keep annotations for a subset of event types only.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// One ACE subtype per parent type.
pub const ONTOLOGY_1PER_TYPES: [&str; 8] = [
    "Movement:Transport",
    "Personnel:Elect",
    "Business:Start-Org",
    "Life:Injure",
    "Transaction:Transfer-Money",
    "Justice:Arrest-Jail",
    "Contact:Phone-Write",
    "Conflict:Demonstrate",
];

pub const FREQ_TOP_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Full,
    Freq,
    #[serde(rename = "ontology_1per")]
    Ontology1Per,
}

impl FromStr for SplitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SplitMode::Full),
            "freq" => Ok(SplitMode::Freq),
            "ontology_1per" | "ontology" => Ok(SplitMode::Ontology1Per),
            other => Err(Error::Config(format!("unknown split mode `{other}`"))),
        }
    }
}

// ACE names appear as both "Life:Injure" and "Life.Injure"; compare loosely.
fn normalize(t: &str) -> String {
    t.to_ascii_lowercase().replace([':', '.', '_'], ":")
}

/// Event types counted over `docs`, most frequent first, ties by name.
pub fn type_frequencies(docs: &[Document]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for e in &d.event_mentions {
            *counts.entry(&e.event_type).or_default() += 1;
        }
    }
    let mut v: Vec<(String, usize)> = counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// The event types a split keeps, as they are spelled in `docs`.
pub fn known_types(docs: &[Document], mode: SplitMode) -> Vec<String> {
    let freq = type_frequencies(docs);
    match mode {
        SplitMode::Full => freq.into_iter().map(|(t, _)| t).collect(),
        SplitMode::Freq => freq.into_iter().take(FREQ_TOP_N).map(|(t, _)| t).collect(),
        SplitMode::Ontology1Per => {
            let wanted: Vec<String> = ONTOLOGY_1PER_TYPES.iter().map(|t| normalize(t)).collect();
            let found: Vec<String> = freq.into_iter().map(|(t, _)| t).filter(|t| wanted.contains(&normalize(t))).collect();
            if found.len() < wanted.len() {
                log::warn!("only {} of the {} listed types occur in the data", found.len(), wanted.len());
            }
            found
        }
    }
}

/// Drops event annotations outside the kept types. Documents themselves are
/// all retained, since their text still serves as unlabeled context.
pub fn build_split(docs: &[Document], mode: SplitMode) -> (Vec<Document>, Vec<String>) {
    let keep = known_types(docs, mode);
    let out = docs
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.event_mentions.retain(|e| keep.contains(&e.event_type));
            d
        })
        .collect();
    (out, keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EventMention;
    use crate::span::Span;

    fn doc(types: &[&str]) -> Document {
        Document {
            doc_id: "d".into(),
            tokens: vec!["x".into(); types.len()],
            sentence_boundaries: vec![Span::new(0, types.len())],
            entity_mentions: vec![],
            event_mentions: types
                .iter()
                .enumerate()
                .map(|(i, t)| EventMention {
                    event_id: format!("e{i}"),
                    event_type: t.to_string(),
                    trigger_span: Span::new(i, i + 1),
                    arguments: vec![],
                })
                .collect(),
            coref_clusters: vec![],
        }
    }

    #[test]
    fn freq_keeps_top_ten_with_name_ties() {
        // J, K and L tie on one mention each; J wins by name.
        let counts =
            [("A", 9), ("B", 8), ("C", 7), ("D", 6), ("E", 5), ("F", 4), ("G", 3), ("H", 2), ("I", 2), ("L", 1), ("K", 1), ("J", 1)];
        let types: Vec<&str> = counts.iter().flat_map(|(t, n)| std::iter::repeat_n(*t, *n)).collect();
        let docs = vec![doc(&types)];
        let (split, keep) = build_split(&docs, SplitMode::Freq);
        assert_eq!(keep.len(), 10);
        assert_eq!(keep[9], "J");
        assert!(split[0].event_mentions.iter().all(|e| e.event_type != "K" && e.event_type != "L"));
    }

    #[test]
    fn ontology_split_and_identity() {
        let docs = vec![doc(&["Movement:Transport", "Conflict:Attack", "Personnel.Elect", "Life:Die"])];
        let (split, keep) = build_split(&docs, SplitMode::Ontology1Per);
        assert_eq!(keep, vec!["Movement:Transport", "Personnel.Elect"]);
        assert_eq!(split[0].event_mentions.len(), 2);
        let (full, _) = build_split(&docs, SplitMode::Full);
        assert_eq!(full, docs);
        assert_eq!("ontology_1per".parse::<SplitMode>().unwrap(), SplitMode::Ontology1Per);
    }
}
