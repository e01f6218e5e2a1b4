//! Turning documents into tagged sentences, and tags back into trigger spans.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::span::Span;

use super::class_vector::ClassVector;
use super::crf::marginals;
use super::embed::EmbeddingBackend;
use super::model::{TapKeyModel, O_TAG};
use super::train::TaggedSequence;

pub const DEFAULT_TAU_I: f64 = 0.55;
pub const DEFAULT_TAU_O: f64 = 0.30;

/// Sentence spans of a document; the whole document if none are recorded.
pub fn sentence_spans(doc: &Document) -> Vec<Span> {
    if doc.sentence_boundaries.is_empty() {
        vec![Span::new(0, doc.tokens.len())]
    } else {
        doc.sentence_boundaries.clone()
    }
}

fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.norm() * b.norm();
    if n > 0.0 {
        a.dot(b) / n
    } else {
        0.0
    }
}

/// Confident tags from cosine similarity to the class vectors: the best class
/// at `≥ tau_i`, O at `≤ tau_o`, unknown (`None`) in between. Tag `k + 1`
/// stands for `class_vectors[k]`.
pub fn pseudo_label(class_vectors: &[ClassVector], embeddings: &[DVector<f64>], tau_i: f64, tau_o: f64) -> Vec<Option<usize>> {
    let cs: Vec<DVector<f64>> = class_vectors.iter().map(ClassVector::as_dvector).collect();
    embeddings
        .iter()
        .map(|h| {
            let (best, sim) =
                cs.iter()
                    .enumerate()
                    .map(|(k, c)| (k, cosine(h, c)))
                    .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if sim >= tau_i {
                Some(best + 1)
            } else if sim <= tau_o {
                Some(O_TAG)
            } else {
                None
            }
        })
        .collect()
}

/// Gold IO tags for the tokens of `sentence`. Triggers of types outside
/// `classes` are tagged unknown rather than O.
pub fn gold_tags(doc: &Document, sentence: Span, classes: &[String]) -> Vec<Option<usize>> {
    let mut tags = vec![Some(O_TAG); sentence.len()];
    for ev in &doc.event_mentions {
        if !sentence.contains(&ev.trigger_span) {
            continue;
        }
        let tag = classes.iter().position(|c| *c == ev.event_type).map(|k| k + 1);
        for i in ev.trigger_span.start..ev.trigger_span.end {
            tags[i - sentence.start] = tag;
        }
    }
    tags
}

/// One tagged sequence per sentence with gold tags.
pub fn gold_sequences<B: EmbeddingBackend + ?Sized>(docs: &[Document], backend: &B, classes: &[String]) -> Vec<TaggedSequence> {
    let mut out = Vec::new();
    for doc in docs {
        for s in sentence_spans(doc) {
            let toks = &doc.tokens[s.start..s.end];
            out.push(TaggedSequence { embeddings: backend.token_embeddings(toks), tags: gold_tags(doc, s, classes) });
        }
    }
    out
}

/// One pseudo-labelled sequence per sentence that has at least one confident event tag.
pub fn pseudo_sequences<B: EmbeddingBackend + ?Sized>(
    sentences: &[Vec<String>],
    backend: &B,
    class_vectors: &[ClassVector],
    tau_i: f64,
    tau_o: f64,
) -> Vec<TaggedSequence> {
    sentences
        .iter()
        .filter_map(|s| {
            let embeddings = backend.token_embeddings(s);
            let tags = pseudo_label(class_vectors, &embeddings, tau_i, tau_o);
            tags.iter().any(|t| t.is_some_and(|k| k != O_TAG)).then_some(TaggedSequence { embeddings, tags })
        })
        .collect()
}

/// Maximal runs of one non-O tag, as `(span, tag)`.
pub fn tags_to_spans(tags: &[usize]) -> Vec<(Span, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if tags[i] == O_TAG {
            i += 1;
            continue;
        }
        let start = i;
        while i < tags.len() && tags[i] == tags[start] {
            i += 1;
        }
        out.push((Span::new(start, i), tags[start]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerPrediction {
    pub doc_id: String,
    pub sent_idx: usize,
    /// Document-level token offsets.
    pub span: Span,
    pub event_type: String,
    /// Mean posterior probability of the predicted tag over the span.
    pub score: f64,
}

/// Viterbi tags per sentence, merged into typed trigger spans.
pub fn predict_triggers<B: EmbeddingBackend + ?Sized>(model: &TapKeyModel, backend: &B, doc: &Document) -> Vec<TriggerPrediction> {
    let mut out = Vec::new();
    for (sent_idx, s) in sentence_spans(doc).into_iter().enumerate() {
        if s.is_empty() {
            continue;
        }
        let hs = backend.token_embeddings(&doc.tokens[s.start..s.end]);
        let (pot, _) = model.potentials(&hs);
        let tags = super::crf::viterbi(&pot).0;
        let spans = tags_to_spans(&tags);
        if spans.is_empty() {
            continue;
        }
        let marg = marginals(&pot, None);
        for (span, tag) in spans {
            let score = (span.start..span.end).map(|i| marg.unary[i][tag]).sum::<f64>() / span.len() as f64;
            out.push(TriggerPrediction {
                doc_id: doc.doc_id.clone(),
                sent_idx,
                span: Span::new(s.start + span.start, s.start + span.end),
                event_type: model.classes()[tag - 1].clone(),
                score,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::mcveigh_doc;

    #[test]
    fn threshold_table() {
        let cv = ClassVector { event_type: "A".into(), vector: vec![1.0, 0.0], support_count: 1 };
        let at = |angle: f64| DVector::from_column_slice(&[angle.cos(), angle.sin()]);
        let tags = pseudo_label(
            &[cv],
            &[at(0.0), at(std::f64::consts::FRAC_PI_2), at(0.4f64.acos()), at(0.55f64.acos()), at(0.3f64.acos())],
            DEFAULT_TAU_I,
            DEFAULT_TAU_O,
        );
        assert_eq!(tags, vec![Some(1), Some(0), None, Some(1), Some(0)]);
    }

    #[test]
    fn run_merging() {
        assert!(tags_to_spans(&[0, 0, 0]).is_empty());
        assert_eq!(tags_to_spans(&[0, 2, 2, 0]), vec![(Span::new(1, 3), 2)]);
        assert_eq!(tags_to_spans(&[1, 2, 2]), vec![(Span::new(0, 1), 1), (Span::new(1, 3), 2)]);
    }

    #[test]
    fn gold_tags_mark_unknown_types() {
        let doc = mcveigh_doc();
        let s = sentence_spans(&doc)[1];
        let ty = doc.event_mentions[0].event_type.clone();
        let tags = gold_tags(&doc, s, &[ty]);
        assert_eq!(tags[10 - s.start], Some(1));
        assert_eq!(gold_tags(&doc, s, &[])[10 - s.start], None);
    }
}
