//! Canonical document model, dataset loaders, mention views and corpus statistics.

mod rams;
pub mod stats;
mod wikievents;

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::ontology::EventOntology;
use crate::span::Span;

pub use rams::{load_rams, rams_record_to_document, RamsRecord};
pub use stats::{distance_stats, DistanceStats};
pub use wikievents::{
    document_to_wiki_records, load_wikievents, wiki_record_to_document, write_wikievents, WikiCorefRecord, WikiDocRecord,
};

/// Informativeness rank of a mention: names beat nominals beat pronouns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MentionLevel {
    Pronoun,
    Nominal,
    Name,
}

impl MentionLevel {
    /// Maps the labels used by released datasets; unknown labels fall back to `Nominal`.
    pub fn from_label(label: &str) -> Self {
        match label.to_ascii_uppercase().as_str() {
            "NAM" | "NAME" => MentionLevel::Name,
            "PRO" | "PRON" | "PRONOUN" => MentionLevel::Pronoun,
            _ => MentionLevel::Nominal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub mention_id: String,
    pub span: Span,
    pub head_span: Span,
    pub mention_level: MentionLevel,
    pub entity_type: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentRef {
    pub role: String,
    pub mention_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMention {
    pub event_id: String,
    pub event_type: String,
    pub trigger_span: Span,
    pub arguments: Vec<ArgumentRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefCluster {
    pub cluster_id: String,
    pub mention_ids: Vec<String>,
    pub informative_mention_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub sentence_boundaries: Vec<Span>,
    pub entity_mentions: Vec<EntityMention>,
    pub event_mentions: Vec<EventMention>,
    pub coref_clusters: Vec<CorefCluster>,
}

impl Document {
    pub fn text_of(&self, span: Span) -> String {
        self.tokens[span.start..span.end].join(" ")
    }

    pub fn mention(&self, id: &str) -> Option<&EntityMention> {
        self.entity_mentions.iter().find(|m| m.mention_id == id)
    }

    pub fn mention_index(&self) -> HashMap<&str, &EntityMention> {
        self.entity_mentions.iter().map(|m| (m.mention_id.as_str(), m)).collect()
    }

    pub fn cluster_of(&self, mention_id: &str) -> Option<&CorefCluster> {
        self.coref_clusters.iter().find(|c| c.mention_ids.iter().any(|m| m == mention_id))
    }

    pub fn event(&self, event_id: &str) -> Option<&EventMention> {
        self.event_mentions.iter().find(|e| e.event_id == event_id)
    }

    /// Index of the sentence containing `token`.
    pub fn sentence_of(&self, token: usize) -> Option<usize> {
        self.sentence_boundaries.iter().position(|s| s.start <= token && token < s.end)
    }

    /// Gives every mention not covered by a cluster its own singleton cluster.
    pub fn ensure_singleton_clusters(&mut self) {
        let covered: BTreeSet<String> = self.coref_clusters.iter().flat_map(|c| c.mention_ids.iter().cloned()).collect();
        for m in &self.entity_mentions {
            if !covered.contains(&m.mention_id) {
                self.coref_clusters.push(CorefCluster {
                    cluster_id: format!("{}-singleton", m.mention_id),
                    mention_ids: vec![m.mention_id.clone()],
                    informative_mention_id: m.mention_id.clone(),
                });
            }
        }
    }

    /// Checks the structural invariants of the document model.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Document { doc_id: self.doc_id.clone(), message };
        let n = self.tokens.len();
        let mut expect = 0;
        for s in &self.sentence_boundaries {
            if s.start != expect || s.end < s.start {
                return Err(fail(format!("sentence boundaries do not partition the tokens at {s}")));
            }
            expect = s.end;
        }
        if expect != n && !(n == 0 && self.sentence_boundaries.is_empty()) {
            return Err(fail(format!("sentences cover {expect} of {n} tokens")));
        }
        let in_range = |s: &Span| s.start < s.end && s.end <= n;
        for m in &self.entity_mentions {
            if !in_range(&m.span) {
                return Err(fail(format!("mention {} span {} out of range", m.mention_id, m.span)));
            }
            if !m.span.contains(&m.head_span) || m.head_span.is_empty() {
                return Err(fail(format!("mention {} head {} outside span {}", m.mention_id, m.head_span, m.span)));
            }
        }
        let ids: BTreeSet<&str> = self.entity_mentions.iter().map(|m| m.mention_id.as_str()).collect();
        for e in &self.event_mentions {
            if !in_range(&e.trigger_span) {
                return Err(fail(format!("event {} trigger {} out of range", e.event_id, e.trigger_span)));
            }
            for a in &e.arguments {
                if !ids.contains(a.mention_id.as_str()) {
                    return Err(fail(format!("event {} argument refers to unknown mention {}", e.event_id, a.mention_id)));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for c in &self.coref_clusters {
            if c.mention_ids.is_empty() {
                return Err(fail(format!("cluster {} is empty", c.cluster_id)));
            }
            if !c.mention_ids.contains(&c.informative_mention_id) {
                return Err(fail(format!("cluster {} informative mention is not a member", c.cluster_id)));
            }
            for m in &c.mention_ids {
                if !ids.contains(m.as_str()) {
                    return Err(fail(format!("cluster {} refers to unknown mention {m}", c.cluster_id)));
                }
                if !seen.insert(m.as_str()) {
                    return Err(fail(format!("mention {m} belongs to two clusters")));
                }
            }
        }
        Ok(())
    }

    /// Warns about roles or event types the ontology does not know; they are kept as-is.
    pub fn check_against(&self, ontology: &EventOntology) {
        for e in &self.event_mentions {
            match ontology.get(&e.event_type) {
                None => log::warn!("{}: unknown event type `{}`", self.doc_id, e.event_type),
                Some(def) => {
                    for a in &e.arguments {
                        if def.role(&a.role).is_none() {
                            log::warn!("{}: event type `{}` has no role `{}`; keeping raw role", self.doc_id, e.event_type, a.role);
                        }
                    }
                }
            }
        }
    }
}

fn informativeness_key(m: &EntityMention) -> (MentionLevel, usize, Reverse<usize>, Reverse<&str>) {
    (m.mention_level, m.span.len(), Reverse(m.span.start), Reverse(m.mention_id.as_str()))
}

/// Picks the most informative member of a cluster: highest mention level, then
/// the longest span, then the earliest position.
pub fn informative_mention<'a>(cluster: &CorefCluster, mentions: &HashMap<&str, &'a EntityMention>) -> Result<&'a EntityMention> {
    let mut best: Option<&EntityMention> = None;
    for id in &cluster.mention_ids {
        let m = *mentions
            .get(id.as_str())
            .ok_or_else(|| Error::Contract(format!("cluster {} refers to unknown mention {id}", cluster.cluster_id)))?;
        if best.is_none_or(|b| informativeness_key(m) > informativeness_key(b)) {
            best = Some(m);
        }
    }
    best.ok_or_else(|| Error::Contract(format!("cluster {} is empty", cluster.cluster_id)))
}

/// Which cluster member stands in for an argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgumentView {
    /// The mention closest to the trigger.
    Nearest,
    /// The most informative mention in the whole document.
    Informative,
}

impl std::str::FromStr for ArgumentView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(ArgumentView::Nearest),
            "informative" => Ok(ArgumentView::Informative),
            other => Err(Error::Config(format!("unknown argument view `{other}`"))),
        }
    }
}

/// The cluster member with the smallest token gap to the trigger; ties go to the earlier mention.
pub fn nearest_mention<'a>(doc: &'a Document, trigger: Span, mention_id: &str) -> Option<&'a EntityMention> {
    let members: Vec<&EntityMention> = match doc.cluster_of(mention_id) {
        Some(c) => c.mention_ids.iter().filter_map(|id| doc.mention(id)).collect(),
        None => doc.mention(mention_id).into_iter().collect(),
    };
    members.into_iter().min_by_key(|m| (trigger.gap(&m.span), m.span.start, m.span.end))
}

/// The informative member of the argument's cluster, as recorded on the cluster.
pub fn informative_for<'a>(doc: &'a Document, mention_id: &str) -> Option<&'a EntityMention> {
    match doc.cluster_of(mention_id) {
        Some(c) => doc.mention(&c.informative_mention_id),
        None => doc.mention(mention_id),
    }
}

/// Rewrites each argument to the cluster mention nearest the trigger.
pub fn nearest_argument_view(doc: &Document, event: &EventMention) -> EventMention {
    argument_view(doc, event, ArgumentView::Nearest)
}

pub fn argument_view(doc: &Document, event: &EventMention, view: ArgumentView) -> EventMention {
    let arguments = event
        .arguments
        .iter()
        .map(|a| {
            let chosen = match view {
                ArgumentView::Nearest => nearest_mention(doc, event.trigger_span, &a.mention_id),
                ArgumentView::Informative => informative_for(doc, &a.mention_id),
            };
            ArgumentRef { role: a.role.clone(), mention_id: chosen.map_or_else(|| a.mention_id.clone(), |m| m.mention_id.clone()) }
        })
        .collect();
    EventMention { arguments, ..event.clone() }
}

/// Writes documents in the canonical jsonlines schema (one `Document` per line).
/// Every sentence as a token list; a document without recorded sentences counts as one.
pub fn corpus_sentences(docs: &[Document]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for d in docs {
        if d.sentence_boundaries.is_empty() {
            out.push(d.tokens.clone());
        }
        out.extend(d.sentence_boundaries.iter().map(|s| d.tokens[s.start..s.end].to_vec()));
    }
    out
}

pub fn write_documents(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    jsonl::write(path, docs)
}

/// Reads the canonical jsonlines schema and validates every document.
pub fn read_documents(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let docs: Vec<Document> = jsonl::read(path)?;
    for d in &docs {
        d.validate()?;
    }
    Ok(docs)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn mention(id: &str, start: usize, end: usize, level: MentionLevel, tokens: &[&str]) -> EntityMention {
        EntityMention {
            mention_id: id.into(),
            span: Span::new(start, end),
            head_span: Span::new(end - 1, end),
            mention_level: level,
            entity_type: "PER".into(),
            text: tokens[start..end].join(" "),
        }
    }

    /// Two sentences; "Timothy McVeigh" and "McVeigh" and "he" corefer.
    pub(crate) fn mcveigh_doc() -> Document {
        let toks: Vec<&str> = "Timothy McVeigh rented a truck . Later McVeigh said he detonated the bomb .".split(' ').collect();
        let ms = vec![
            mention("m1", 0, 2, MentionLevel::Name, &toks),
            mention("m2", 7, 8, MentionLevel::Name, &toks),
            mention("m3", 9, 10, MentionLevel::Pronoun, &toks),
            mention("m4", 11, 13, MentionLevel::Nominal, &toks),
        ];
        let mut doc = Document {
            doc_id: "d1".into(),
            tokens: toks.iter().map(|s| s.to_string()).collect(),
            sentence_boundaries: vec![Span::new(0, 6), Span::new(6, 14)],
            entity_mentions: ms,
            event_mentions: vec![EventMention {
                event_id: "e1".into(),
                event_type: "Conflict.Attack.DetonateExplode".into(),
                trigger_span: Span::new(10, 11),
                arguments: vec![
                    ArgumentRef { role: "Attacker".into(), mention_id: "m1".into() },
                    ArgumentRef { role: "ExplosiveDevice".into(), mention_id: "m4".into() },
                ],
            }],
            coref_clusters: vec![CorefCluster {
                cluster_id: "c1".into(),
                mention_ids: vec!["m1".into(), "m2".into(), "m3".into()],
                informative_mention_id: "m1".into(),
            }],
        };
        doc.ensure_singleton_clusters();
        doc
    }

    #[test]
    fn fixture_is_valid() {
        mcveigh_doc().validate().unwrap();
    }

    #[test]
    fn name_beats_pronoun() {
        let doc = mcveigh_doc();
        let idx = doc.mention_index();
        let c = CorefCluster { cluster_id: "c".into(), mention_ids: vec!["m3".into(), "m2".into()], informative_mention_id: "m2".into() };
        assert_eq!(informative_mention(&c, &idx).unwrap().text, "McVeigh");
    }

    #[test]
    fn longer_name_wins_among_names() {
        let doc = mcveigh_doc();
        let idx = doc.mention_index();
        let c = &doc.coref_clusters[0];
        assert_eq!(informative_mention(c, &idx).unwrap().text, "Timothy McVeigh");
    }

    #[test]
    fn singleton_cluster_returns_its_member() {
        let doc = mcveigh_doc();
        let idx = doc.mention_index();
        let c = doc.cluster_of("m4").unwrap();
        assert_eq!(informative_mention(c, &idx).unwrap().mention_id, "m4");
    }

    #[test]
    fn empty_cluster_is_contract_violation() {
        let doc = mcveigh_doc();
        let idx = doc.mention_index();
        let c = CorefCluster { cluster_id: "x".into(), mention_ids: vec![], informative_mention_id: String::new() };
        assert!(matches!(informative_mention(&c, &idx), Err(Error::Contract(_))));
    }

    #[test]
    fn nearest_view_brute_force() {
        let doc = mcveigh_doc();
        let ev = &doc.event_mentions[0];
        let view = nearest_argument_view(&doc, ev);
        // Enumerate all cluster members and pick the argmin by hand.
        let trigger = ev.trigger_span;
        let members = ["m1", "m2", "m3"];
        let dists: Vec<usize> = members.iter().map(|id| trigger.gap(&doc.mention(id).unwrap().span)).collect();
        assert_eq!(dists, vec![8, 2, 0]);
        assert_eq!(view.arguments[0].mention_id, "m3");
        assert_eq!(view.arguments[1].mention_id, "m4");
        assert_eq!(nearest_argument_view(&doc, &view), view);
    }

    #[test]
    fn informative_view_uses_cluster_choice() {
        let doc = mcveigh_doc();
        let view = argument_view(&doc, &doc.event_mentions[0], ArgumentView::Informative);
        assert_eq!(view.arguments[0].mention_id, "m1");
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let mut doc = mcveigh_doc();
        doc.entity_mentions[0].span = Span::new(10, 40);
        assert!(doc.validate().is_err());
    }

    proptest! {
        #[test]
        fn informative_choice_is_permutation_invariant(seed in 0u64..1000, levels in proptest::collection::vec(0u8..3, 1..6)) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let toks: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
            let trefs: Vec<&str> = toks.iter().map(|s| s.as_str()).collect();
            let ms: Vec<EntityMention> = levels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let level = [MentionLevel::Pronoun, MentionLevel::Nominal, MentionLevel::Name][l as usize];
                    let start = i * 5;
                    mention(&format!("m{i}"), start, start + 1 + (i % 3), level, &trefs)
                })
                .collect();
            let idx: HashMap<&str, &EntityMention> = ms.iter().map(|m| (m.mention_id.as_str(), m)).collect();
            let mut ids: Vec<String> = ms.iter().map(|m| m.mention_id.clone()).collect();
            let c1 = CorefCluster { cluster_id: "c".into(), mention_ids: ids.clone(), informative_mention_id: ids[0].clone() };
            ids.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let c2 = CorefCluster { mention_ids: ids, ..c1.clone() };
            prop_assert_eq!(
                &informative_mention(&c1, &idx).unwrap().mention_id,
                &informative_mention(&c2, &idx).unwrap().mention_id
            );
        }
    }

    #[test]
    fn canonical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("docs.jsonl");
        let docs = vec![mcveigh_doc()];
        write_documents(&p, &docs).unwrap();
        assert_eq!(read_documents(&p).unwrap(), docs);
    }
}
