//! Precision, recall and F1 for triggers and arguments.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arggen::ArgumentPrediction;
use crate::corpus::{informative_for, Document, EntityMention};
use crate::error::{Error, Result};
use crate::span::Span;
use crate::tapkey::TriggerPrediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub setting: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub num_pred: usize,
    pub num_gold: usize,
    pub num_correct: usize,
}

impl ScoreReport {
    pub fn from_counts(setting: impl Into<String>, num_pred: usize, num_gold: usize, num_correct: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(num_correct, num_pred);
        let recall = ratio(num_correct, num_gold);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        ScoreReport { setting: setting.into(), precision, recall, f1, num_pred, num_gold, num_correct }
    }
}

/// Fixed-width text table, one row per report, percentages.
pub fn render_table(reports: &[ScoreReport]) -> String {
    let mut s = format!("{:<24} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}\n", "setting", "P", "R", "F1", "pred", "gold", "ok");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<24} {:>7.2} {:>7.2} {:>7.2} {:>6} {:>6} {:>6}",
            r.setting,
            100.0 * r.precision,
            100.0 * r.recall,
            100.0 * r.f1,
            r.num_pred,
            r.num_gold,
            r.num_correct
        );
    }
    s
}

/// Greedy one-to-one matching. Predictions are visited in sorted order (so the
/// result does not depend on input order) and each takes the first free gold
/// item, in gold order, that it matches.
fn count_matches<P, G>(
    preds: &mut [P],
    golds: &[G],
    key: impl Fn(&P) -> (usize, usize, String),
    matches: impl Fn(&P, &G) -> bool,
) -> usize {
    preds.sort_by_key(|p| key(p));
    let mut used = vec![false; golds.len()];
    let mut correct = 0;
    for p in preds.iter() {
        if let Some(j) = (0..golds.len()).find(|&j| !used[j] && matches(p, &golds[j])) {
            used[j] = true;
            correct += 1;
        }
    }
    correct
}

fn doc_index(gold: &[Document]) -> HashMap<&str, &Document> {
    gold.iter().map(|d| (d.doc_id.as_str(), d)).collect()
}

/// Trigger identification (offsets) and classification (offsets and type).
pub fn score_triggers(pred: &[TriggerPrediction], gold: &[Document]) -> Result<(ScoreReport, ScoreReport)> {
    let docs = doc_index(gold);
    let mut by_doc: BTreeMap<&str, Vec<&TriggerPrediction>> = BTreeMap::new();
    for p in pred {
        if !docs.contains_key(p.doc_id.as_str()) {
            return Err(Error::DocMismatch(p.doc_id.clone()));
        }
        by_doc.entry(&p.doc_id).or_default().push(p);
    }
    let num_gold: usize = gold.iter().map(|d| d.event_mentions.len()).sum();
    let (mut ti, mut tc) = (0, 0);
    for (doc_id, mut ps) in by_doc {
        let events: Vec<(Span, &str)> = docs[doc_id].event_mentions.iter().map(|e| (e.trigger_span, e.event_type.as_str())).collect();
        let key = |p: &&TriggerPrediction| (p.span.start, p.span.end, p.event_type.clone());
        ti += count_matches(&mut ps, &events, key, |p, g| p.span == g.0);
        tc += count_matches(&mut ps, &events, key, |p, g| p.span == g.0 && p.event_type == g.1);
    }
    Ok((
        ScoreReport::from_counts("trigger-identification", pred.len(), num_gold, ti),
        ScoreReport::from_counts("trigger-classification", pred.len(), num_gold, tc),
    ))
}

/// How a predicted argument is compared with a gold one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgMatch {
    /// Head offsets equal the annotated argument's head.
    Head,
    /// Head offsets equal the head of any mention coreferent with the annotated argument.
    Coref,
    /// Head offsets equal the head of the most informative mention of the argument's entity.
    Informative,
    /// Full span offsets equal the annotated argument's span.
    Span,
}

impl ArgMatch {
    pub fn label(self, classification: bool) -> String {
        let name = match self {
            ArgMatch::Head => "head",
            ArgMatch::Coref => "coref",
            ArgMatch::Informative => "informative",
            ArgMatch::Span => "span",
        };
        format!("arg-{}-{name}", if classification { "C" } else { "I" })
    }
}

/// The head of a predicted span: the head of the document mention with exactly
/// that span if there is one, else its last token.
pub fn predicted_head(doc: &Document, span: Span) -> Span {
    doc.entity_mentions.iter().find(|m| m.span == span).map_or_else(|| span.last_token(), |m| m.head_span)
}

struct GoldArg<'a> {
    role: &'a str,
    mention: &'a EntityMention,
    /// Heads that earn credit under the chosen setting.
    heads: Vec<Span>,
}

fn gold_args<'a>(doc: &'a Document, event_id: &str, how: ArgMatch) -> Vec<GoldArg<'a>> {
    let Some(event) = doc.event(event_id) else {
        return Vec::new();
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in &event.arguments {
        if !seen.insert((a.role.as_str(), a.mention_id.as_str())) {
            continue;
        }
        let Some(m) = doc.mention(&a.mention_id) else {
            log::warn!("{}: argument refers to unknown mention {}", doc.doc_id, a.mention_id);
            continue;
        };
        let heads = match how {
            ArgMatch::Head | ArgMatch::Span => vec![m.head_span],
            ArgMatch::Coref => match doc.cluster_of(&m.mention_id) {
                Some(c) => c.mention_ids.iter().filter_map(|id| doc.mention(id)).map(|x| x.head_span).collect(),
                None => vec![m.head_span],
            },
            ArgMatch::Informative => vec![informative_for(doc, &m.mention_id).unwrap_or(m).head_span],
        };
        out.push(GoldArg { role: &a.role, mention: m, heads });
    }
    out.sort_by_key(|g| (g.mention.span.start, g.mention.span.end, g.role.to_string()));
    out
}

/// Argument scores, matching within each event. With `classification` the
/// role must also agree. Predictions for events absent from the gold data
/// count as wrong.
pub fn score_arguments(pred: &[ArgumentPrediction], gold: &[Document], how: ArgMatch, classification: bool) -> Result<ScoreReport> {
    let docs = doc_index(gold);
    let mut by_event: BTreeMap<(&str, &str), Vec<&ArgumentPrediction>> = BTreeMap::new();
    for p in pred {
        if !docs.contains_key(p.doc_id.as_str()) {
            return Err(Error::DocMismatch(p.doc_id.clone()));
        }
        by_event.entry((&p.doc_id, &p.event_id)).or_default().push(p);
    }
    let mut num_gold = 0;
    for d in gold {
        for e in &d.event_mentions {
            num_gold += gold_args(d, &e.event_id, how).len();
        }
    }
    let mut correct = 0;
    for ((doc_id, event_id), mut ps) in by_event {
        let doc = docs[doc_id];
        let golds = gold_args(doc, event_id, how);
        let key = |p: &&ArgumentPrediction| (p.span.start, p.span.end, p.role.clone());
        correct += count_matches(&mut ps, &golds, key, |p, g| {
            let located = match how {
                ArgMatch::Span => p.span == g.mention.span,
                _ => g.heads.contains(&predicted_head(doc, p.span)),
            };
            located && (!classification || p.role == g.role)
        });
    }
    Ok(ScoreReport::from_counts(how.label(classification), pred.len(), num_gold, correct))
}

pub fn score_args_head(pred: &[ArgumentPrediction], gold: &[Document], classification: bool) -> Result<ScoreReport> {
    score_arguments(pred, gold, ArgMatch::Head, classification)
}

pub fn score_args_coref(pred: &[ArgumentPrediction], gold: &[Document], classification: bool) -> Result<ScoreReport> {
    score_arguments(pred, gold, ArgMatch::Coref, classification)
}

pub fn score_args_informative(pred: &[ArgumentPrediction], gold: &[Document], classification: bool) -> Result<ScoreReport> {
    score_arguments(pred, gold, ArgMatch::Informative, classification)
}

/// Span F1 and head F1 with roles, as used for RAMS.
pub fn score_rams_span(pred: &[ArgumentPrediction], gold: &[Document]) -> Result<(ScoreReport, ScoreReport)> {
    Ok((score_arguments(pred, gold, ArgMatch::Span, true)?, score_arguments(pred, gold, ArgMatch::Head, true)?))
}

/// Identification and classification under head, coref and informative matching.
pub fn score_all_arguments(pred: &[ArgumentPrediction], gold: &[Document]) -> Result<Vec<ScoreReport>> {
    let mut out = Vec::new();
    for how in [ArgMatch::Head, ArgMatch::Coref, ArgMatch::Informative] {
        for classification in [false, true] {
            out.push(score_arguments(pred, gold, how, classification)?);
        }
    }
    Ok(out)
}

/// Rewrites the event ids of argument predictions made for predicted triggers
/// to the gold event whose trigger offsets and type they match. Arguments of
/// unmatched triggers keep their id, so they count as wrong.
pub fn align_to_gold_events(
    pred: &[ArgumentPrediction],
    triggers: &[(String, String, Span, String)],
    gold: &[Document],
) -> Vec<ArgumentPrediction> {
    let docs = doc_index(gold);
    let mut map: HashMap<(&str, &str), &str> = HashMap::new();
    let mut taken: HashSet<(&str, &str)> = HashSet::new();
    for (doc_id, event_id, span, ty) in triggers {
        let Some(doc) = docs.get(doc_id.as_str()) else { continue };
        if let Some(g) = doc
            .event_mentions
            .iter()
            .find(|e| e.trigger_span == *span && e.event_type == *ty && !taken.contains(&(doc_id.as_str(), e.event_id.as_str())))
        {
            taken.insert((doc_id, &g.event_id));
            map.insert((doc_id, event_id), &g.event_id);
        }
    }
    pred.iter()
        .map(|p| {
            let mut q = p.clone();
            if let Some(g) = map.get(&(p.doc_id.as_str(), p.event_id.as_str())) {
                q.event_id = g.to_string();
            } else if docs.get(p.doc_id.as_str()).and_then(|d| d.event(&p.event_id)).is_some() {
                // Never let a predicted id collide with a gold one by accident.
                q.event_id = format!("{}#unmatched", p.event_id);
            }
            q
        })
        .collect()
}
