//! Generation inputs and outputs: blank templates, trigger-marked documents,
//! gold target construction, and parsing generated templates back into
//! document spans.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{argument_view, ArgumentView, Document, EventMention};
use crate::error::{Error, Result};
use crate::ontology::{EventTypeDef, TemplatePiece};
use crate::span::Span;

/// Reserved symbols. Backends must treat each as a single atomic token.
pub mod symbols {
    pub const PLACEHOLDER: &str = "<arg>";
    pub const TRIGGER: &str = "<tgr>";
    pub const BOS: &str = "<s>";
    pub const EOS: &str = "</s>";
    pub const AND: &str = "and";
}

use symbols::{AND, BOS, EOS, PLACEHOLDER, TRIGGER};

/// Minimum share of template anchor words a generation must reproduce to be parsed.
pub const MIN_ANCHOR_COVERAGE: f64 = 0.6;

/// Replaces every `<argN>` marker with the placeholder; `slot_order[i]` is the
/// role behind the i-th placeholder.
pub fn blank_template(def: &EventTypeDef) -> Result<(Vec<String>, Vec<String>)> {
    let mut tokens = Vec::new();
    let mut slot_order = Vec::new();
    for piece in def.pieces()? {
        match piece {
            TemplatePiece::Word(w) => tokens.push(w),
            TemplatePiece::Slot(i) => {
                let role = def
                    .role_for_slot(i)
                    .ok_or_else(|| Error::Ontology { event_type: def.name.clone(), message: format!("no role for <arg{i}>") })?;
                tokens.push(PLACEHOLDER.to_string());
                slot_order.push(role.name.clone());
            }
        }
    }
    Ok((tokens, slot_order))
}

/// Document tokens with trigger delimiters, restricted to a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedDocument {
    pub tokens: Vec<String>,
    /// Document offset of the first kept token.
    pub window_start: usize,
}

/// Inserts a delimiter on each side of the trigger. Documents longer than
/// `max_len` keep a `max_len`-token window centred on the trigger, clamped at
/// the document edges.
pub fn mark_trigger(doc: &Document, event: &EventMention, max_len: usize) -> Result<MarkedDocument> {
    let trig = event.trigger_span;
    let n = doc.tokens.len();
    if trig.is_empty() || trig.end > n {
        return Err(Error::Contract(format!("trigger {trig} outside document {} of {n} tokens", doc.doc_id)));
    }
    let (start, end) = centred_window(n, trig, max_len)?;
    let mut tokens = Vec::with_capacity(end - start + 2);
    tokens.extend_from_slice(&doc.tokens[start..trig.start]);
    tokens.push(TRIGGER.to_string());
    tokens.extend_from_slice(&doc.tokens[trig.start..trig.end]);
    tokens.push(TRIGGER.to_string());
    tokens.extend_from_slice(&doc.tokens[trig.end..end]);
    Ok(MarkedDocument { tokens, window_start: start })
}

fn centred_window(n: usize, keep: Span, max_len: usize) -> Result<(usize, usize)> {
    if n <= max_len {
        return Ok((0, n));
    }
    if keep.len() > max_len {
        return Err(Error::Contract(format!("span {keep} does not fit in a window of {max_len} tokens")));
    }
    let slack = max_len - keep.len();
    let start = keep.start.saturating_sub(slack / 2).min(n - max_len);
    Ok((start, start + max_len))
}

/// Everything the generator needs for one trigger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationInstance {
    pub doc_id: String,
    pub event_id: String,
    pub event_type: String,
    pub blank_template: Vec<String>,
    pub marked_document: Vec<String>,
    pub window_start: usize,
    pub slot_order: Vec<String>,
}

impl GenerationInstance {
    pub fn new(def: &EventTypeDef, doc: &Document, event: &EventMention, max_doc_len: usize) -> Result<Self> {
        let (blank, slot_order) = blank_template(def)?;
        let marked = mark_trigger(doc, event, max_doc_len)?;
        Ok(GenerationInstance {
            doc_id: doc.doc_id.clone(),
            event_id: event.event_id.clone(),
            event_type: event.event_type.clone(),
            blank_template: blank,
            marked_document: marked.tokens,
            window_start: marked.window_start,
            slot_order,
        })
    }
}

/// Encoder input: `<s> template <s> </s> document </s>`.
///
/// When the whole sequence exceeds `max_len`, only the document side is cut,
/// keeping a window around the trigger delimiters.
pub fn build_input(instance: &GenerationInstance, max_len: usize) -> Result<Vec<String>> {
    let fixed = instance.blank_template.len() + 4;
    if fixed > max_len {
        return Err(Error::Contract(format!("template of {} tokens does not fit in {max_len}", instance.blank_template.len())));
    }
    let doc = &instance.marked_document;
    let budget = max_len - fixed;
    let (start, end) = if doc.len() <= budget {
        (0, doc.len())
    } else {
        let first = doc.iter().position(|t| t == TRIGGER).unwrap_or(0);
        let last = doc.iter().rposition(|t| t == TRIGGER).unwrap_or(first);
        let keep = Span::new(first, last + 1);
        if keep.len() > budget {
            let s = first.min(doc.len() - budget);
            (s, s + budget)
        } else {
            centred_window(doc.len(), keep, budget)?
        }
    };
    let mut out = Vec::with_capacity(fixed + end - start);
    out.push(BOS.to_string());
    out.extend(instance.blank_template.iter().cloned());
    out.push(BOS.to_string());
    out.push(EOS.to_string());
    out.extend_from_slice(&doc[start..end]);
    out.push(EOS.to_string());
    Ok(out)
}

/// Role → filler strings. An empty list means the slot stayed unfilled.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledTemplate {
    pub role_fills: BTreeMap<String, Vec<String>>,
}

impl FilledTemplate {
    pub fn empty(slot_order: &[String]) -> Self {
        FilledTemplate { role_fills: slot_order.iter().map(|r| (r.clone(), Vec::new())).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.role_fills.values().all(Vec::is_empty)
    }

    pub fn filled(&self) -> impl Iterator<Item = (&str, &str)> {
        self.role_fills.iter().flat_map(|(r, fs)| fs.iter().map(move |f| (r.as_str(), f.as_str())))
    }
}

/// Gold role fills under the chosen mention view, in argument order, without duplicates.
pub fn gold_fills(instance: &GenerationInstance, doc: &Document, event: &EventMention, view: ArgumentView) -> FilledTemplate {
    let viewed = argument_view(doc, event, view);
    let mut fills = FilledTemplate::empty(&instance.slot_order);
    let mut used: HashSet<(&str, &str)> = HashSet::new();
    for a in &viewed.arguments {
        let Some(slot) = fills.role_fills.get_mut(&a.role) else {
            log::warn!("{}: role `{}` has no template slot", doc.doc_id, a.role);
            continue;
        };
        if !used.insert((a.role.as_str(), a.mention_id.as_str())) {
            continue;
        }
        if let Some(m) = doc.mention(&a.mention_id) {
            slot.push(doc.text_of(m.span));
        }
    }
    fills
}

/// Target sequence: the template with each placeholder replaced by its
/// arguments, several arguments joined with "and"; unfilled slots keep the placeholder.
pub fn fill_gold(instance: &GenerationInstance, doc: &Document, event: &EventMention, view: ArgumentView) -> Vec<String> {
    render(instance, &gold_fills(instance, doc, event, view))
}

/// Writes `fills` into the blank template.
pub fn render(instance: &GenerationInstance, fills: &FilledTemplate) -> Vec<String> {
    let mut out = Vec::new();
    let mut slot = 0;
    let mut emitted: HashSet<&str> = HashSet::new();
    for tok in &instance.blank_template {
        if tok != PLACEHOLDER {
            out.push(tok.clone());
            continue;
        }
        let role = &instance.slot_order[slot];
        slot += 1;
        let values = fills.role_fills.get(role).map(Vec::as_slice).unwrap_or(&[]);
        // A role repeated in the template is written out at each occurrence.
        emitted.insert(role);
        if values.is_empty() {
            out.push(PLACEHOLDER.to_string());
            continue;
        }
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.push(AND.to_string());
            }
            out.extend(v.split_whitespace().map(str::to_string));
        }
    }
    out
}

/// How generated tokens lined up with the template; kept for debugging.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alignment {
    /// For each template position: the matched generated index (anchors), or the
    /// generated range a slot absorbed.
    pub template_positions: Vec<AlignedPiece>,
    pub anchor_coverage: f64,
    pub junk_tokens: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AlignedPiece {
    Anchor { word: String, matched: Option<usize> },
    Slot { role: String, range: (usize, usize) },
}

struct NgramIndex {
    tokens: Vec<String>,
    grams: HashSet<String>,
}

const MAX_INDEXED_NGRAM: usize = 12;

impl NgramIndex {
    fn new(tokens: impl Iterator<Item = String>) -> Self {
        let tokens: Vec<String> = tokens.map(|t| t.to_lowercase()).collect();
        let mut grams = HashSet::new();
        for i in 0..tokens.len() {
            for len in 1..=MAX_INDEXED_NGRAM.min(tokens.len() - i) {
                grams.insert(tokens[i..i + len].join(" "));
            }
        }
        NgramIndex { tokens, grams }
    }

    fn contains(&self, words: &[String]) -> bool {
        if words.is_empty() {
            return false;
        }
        let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        if lower.len() <= MAX_INDEXED_NGRAM {
            return self.grams.contains(&lower.join(" "));
        }
        self.tokens.windows(lower.len()).any(|w| w == lower.as_slice())
    }
}

fn split_on_and(words: &[String]) -> Vec<Vec<String>> {
    words.split(|w| w.eq_ignore_ascii_case(AND)).filter(|p| !p.is_empty()).map(<[String]>::to_vec).collect()
}

const MATCH_REWARD: f64 = 1.0e4;
const JUNK_PENALTY: f64 = 1.0;
const GROUNDED_BONUS: f64 = 0.5;

fn slot_score(content: &[String], index: &NgramIndex) -> f64 {
    let placeholders = content.iter().filter(|t| *t == PLACEHOLDER).count();
    if content.is_empty() || (content.len() == 1 && placeholders == 1) {
        return 0.0;
    }
    if placeholders > 0 {
        return -JUNK_PENALTY * placeholders as f64;
    }
    let grounded = index.contains(content) || {
        let parts = split_on_and(content);
        parts.len() > 1 && parts.iter().all(|p| index.contains(p))
    };
    if grounded {
        GROUNDED_BONUS
    } else {
        0.0
    }
}

/// Aligns a generated sequence with the instance's template and reads off the
/// slot fillers.
///
/// Template words act as anchors; each slot absorbs the generated tokens
/// between its neighbouring anchors. A slot holding only the placeholder (or
/// nothing) is unfilled. A filler is split on "and" only when the whole
/// string does not occur in the document.
pub fn parse_filled(instance: &GenerationInstance, generated: &[String]) -> Result<(FilledTemplate, Alignment)> {
    let gen: Vec<String> = generated.iter().filter(|t| *t != BOS && *t != EOS).cloned().collect();
    let tpl = &instance.blank_template;
    let index = NgramIndex::new(instance.marked_document.iter().filter(|t| *t != TRIGGER).cloned());
    let (n, m) = (tpl.len(), gen.len());

    // best[i][j]: best score aligning tpl[i..] with gen[j..].
    let mut best = vec![vec![0.0f64; m + 1]; n + 1];
    #[derive(Clone, Copy)]
    enum Step {
        Match,
        Skip,
        Junk,
        Slot(usize),
        End,
    }
    let mut step = vec![vec![Step::End; m + 1]; n + 1];
    for j in 0..=m {
        best[n][j] = -JUNK_PENALTY * (m - j) as f64;
    }
    for i in (0..n).rev() {
        for j in (0..=m).rev() {
            let (mut score, mut choice);
            if tpl[i] == PLACEHOLDER {
                score = f64::NEG_INFINITY;
                choice = Step::End;
                for end in j..=m {
                    let s = slot_score(&gen[j..end], &index) + best[i + 1][end];
                    if s > score {
                        score = s;
                        choice = Step::Slot(end);
                    }
                }
            } else {
                score = best[i + 1][j];
                choice = Step::Skip;
                if j < m {
                    if tpl[i].eq_ignore_ascii_case(&gen[j]) {
                        let s = MATCH_REWARD + best[i + 1][j + 1];
                        if s >= score {
                            score = s;
                            choice = Step::Match;
                        }
                    }
                    let s = best[i][j + 1] - JUNK_PENALTY;
                    if s > score {
                        score = s;
                        choice = Step::Junk;
                    }
                }
            }
            best[i][j] = score;
            step[i][j] = choice;
        }
    }

    let anchors = tpl.iter().filter(|t| *t != PLACEHOLDER).count();
    let mut matched = 0usize;
    let mut pieces = Vec::with_capacity(n);
    let mut junk = Vec::new();
    let mut slot_contents: Vec<Vec<String>> = Vec::with_capacity(instance.slot_order.len());
    let (mut i, mut j) = (0, 0);
    while i < n {
        match step[i][j] {
            Step::Match => {
                pieces.push(AlignedPiece::Anchor { word: tpl[i].clone(), matched: Some(j) });
                matched += 1;
                i += 1;
                j += 1;
            }
            Step::Skip => {
                pieces.push(AlignedPiece::Anchor { word: tpl[i].clone(), matched: None });
                i += 1;
            }
            Step::Junk => {
                junk.push(j);
                j += 1;
            }
            Step::Slot(end) => {
                pieces.push(AlignedPiece::Slot { role: instance.slot_order[slot_contents.len()].clone(), range: (j, end) });
                slot_contents.push(gen[j..end].to_vec());
                i += 1;
                j = end;
            }
            Step::End => unreachable!("every template position has a step"),
        }
    }
    junk.extend(j..m);
    let coverage = if anchors == 0 { 1.0 } else { matched as f64 / anchors as f64 };
    let alignment = Alignment { template_positions: pieces, anchor_coverage: coverage, junk_tokens: junk };
    if coverage < MIN_ANCHOR_COVERAGE {
        return Err(Error::Unparseable { coverage });
    }

    let mut fills = FilledTemplate::empty(&instance.slot_order);
    for (role, content) in instance.slot_order.iter().zip(&slot_contents) {
        let content: Vec<String> = content.iter().filter(|t| *t != PLACEHOLDER).cloned().collect();
        if content.is_empty() {
            continue;
        }
        let parts = if index.contains(&content) {
            vec![content]
        } else {
            match split_on_and(&content) {
                p if p.is_empty() => continue,
                p => p,
            }
        };
        let slot = fills.role_fills.entry(role.clone()).or_default();
        for p in parts {
            let text = p.join(" ");
            if !slot.contains(&text) {
                slot.push(text);
            }
        }
    }
    Ok((fills, alignment))
}

/// An argument located in the original document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedArgument {
    pub role: String,
    pub span: Span,
    pub text: String,
}

/// Locates a filler string in the document.
///
/// Matching is exact and case-insensitive over tokens; with several matches the
/// one closest to the trigger wins (earlier on ties). A filler with no match is
/// split on "and" and each part grounded on its own; parts that still miss are dropped.
pub fn ground(doc: &Document, trigger: Span, role: &str, filler: &str) -> Vec<GroundedArgument> {
    let words: Vec<String> = filler.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        return Vec::new();
    }
    if let Some(span) = closest_match(doc, trigger, &words) {
        return vec![GroundedArgument { role: role.to_string(), span, text: doc.text_of(span) }];
    }
    let parts = split_on_and(&words);
    if parts.len() < 2 {
        log::warn!("{}: could not ground `{filler}` for {role}", doc.doc_id);
        return Vec::new();
    }
    let mut out = Vec::new();
    for part in parts {
        match closest_match(doc, trigger, &part) {
            Some(span) => out.push(GroundedArgument { role: role.to_string(), span, text: doc.text_of(span) }),
            None => log::warn!("{}: dropping ungrounded part `{}` of {role}", doc.doc_id, part.join(" ")),
        }
    }
    out
}

fn closest_match(doc: &Document, trigger: Span, words: &[String]) -> Option<Span> {
    let k = words.len();
    if k > doc.tokens.len() {
        return None;
    }
    (0..=doc.tokens.len() - k)
        .filter(|&s| doc.tokens[s..s + k].iter().zip(words).all(|(a, b)| a.to_lowercase() == *b))
        .map(|s| Span::new(s, s + k))
        .min_by_key(|sp| (trigger.gap(sp), sp.start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArgumentRef, CorefCluster, EntityMention, MentionLevel};
    use crate::ontology::RoleDef;

    fn role(name: &str, slot: usize) -> RoleDef {
        RoleDef { name: name.into(), slot_index: slot, allowed_entity_types: vec!["ANY".into()] }
    }

    fn public_statement() -> EventTypeDef {
        EventTypeDef {
            name: "Contact.PublicStatement".into(),
            template: "<arg1> communicated with <arg2> about <arg3> at <arg4> place".into(),
            roles: vec![role("Communicator", 1), role("Participant", 2), role("Topic", 3), role("Place", 4)],
            keywords: vec![],
        }
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn doc_from(text: &str, trigger: Span, args: &[(&str, usize, usize)]) -> Document {
        let tokens = toks(text);
        let mut mentions = Vec::new();
        let mut arguments = Vec::new();
        for (i, (r, s, e)) in args.iter().enumerate() {
            let id = format!("m{i}");
            mentions.push(EntityMention {
                mention_id: id.clone(),
                span: Span::new(*s, *e),
                head_span: Span::new(e - 1, *e),
                mention_level: MentionLevel::Name,
                entity_type: "PER".into(),
                text: tokens[*s..*e].join(" "),
            });
            arguments.push(ArgumentRef { role: r.to_string(), mention_id: id });
        }
        let n = tokens.len();
        let mut d = Document {
            doc_id: "t".into(),
            tokens,
            sentence_boundaries: vec![Span::new(0, n)],
            entity_mentions: mentions,
            event_mentions: vec![EventMention { event_id: "e".into(), event_type: "X".into(), trigger_span: trigger, arguments }],
            coref_clusters: Vec::<CorefCluster>::new(),
        };
        d.ensure_singleton_clusters();
        d
    }

    #[test]
    fn blank_public_statement() {
        let (t, order) = blank_template(&public_statement()).unwrap();
        assert_eq!(t.iter().filter(|x| *x == PLACEHOLDER).count(), 4);
        assert_eq!(order, vec!["Communicator", "Participant", "Topic", "Place"]);
    }

    #[test]
    fn adjacent_slots_keep_order() {
        let def =
            EventTypeDef { name: "A".into(), template: "<arg1> <arg2>".into(), roles: vec![role("X", 1), role("Y", 2)], keywords: vec![] };
        let (t, order) = blank_template(&def).unwrap();
        assert_eq!(t, vec![PLACEHOLDER, PLACEHOLDER]);
        assert_eq!(order, vec!["X", "Y"]);
    }

    #[test]
    fn marks_reserved_trigger() {
        let doc = doc_from("Dennehy reserved the truck . He paid $280.32 .", Span::new(1, 2), &[]);
        let m = mark_trigger(&doc, &doc.event_mentions[0], 100).unwrap();
        assert_eq!(m.tokens[..5], toks("Dennehy <tgr> reserved <tgr> the")[..]);
        assert_eq!(m.tokens.iter().filter(|t| *t == TRIGGER).count(), 2);
        assert_eq!(m.window_start, 0);
    }

    #[test]
    fn window_clamps_at_start() {
        let text: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
        let doc = doc_from(&text.join(" "), Span::new(0, 1), &[]);
        let m = mark_trigger(&doc, &doc.event_mentions[0], 10).unwrap();
        assert_eq!(m.window_start, 0);
        assert_eq!(m.tokens.len(), 12);
        assert_eq!(m.tokens.last().unwrap(), "w9");
    }

    #[test]
    fn trigger_outside_document_is_rejected() {
        let mut doc = doc_from("a b c", Span::new(0, 1), &[]);
        doc.event_mentions[0].trigger_span = Span::new(2, 9);
        assert!(mark_trigger(&doc, &doc.event_mentions[0], 10).is_err());
    }

    #[test]
    fn input_layout_and_truncation() {
        let def = public_statement();
        let text: Vec<String> = (0..50).map(|i| format!("w{i}")).collect();
        let doc = doc_from(&text.join(" "), Span::new(40, 41), &[]);
        let inst = GenerationInstance::new(&def, &doc, &doc.event_mentions[0], 1000).unwrap();
        let full = build_input(&inst, 1000).unwrap();
        assert_eq!(full[0], BOS);
        assert_eq!(&full[1..10], inst.blank_template.as_slice());
        assert_eq!(&full[10..12], &[BOS.to_string(), EOS.to_string()]);
        assert_eq!(full.last().unwrap(), EOS);
        let short = build_input(&inst, 30).unwrap();
        assert_eq!(short.len(), 30);
        assert_eq!(&short[1..10], inst.blank_template.as_slice());
        assert_eq!(short.iter().filter(|t| *t == TRIGGER).count(), 2);
        assert!(build_input(&inst, 12).is_err());
    }

    #[test]
    fn empty_document_side() {
        let def = public_statement();
        let doc = doc_from("said", Span::new(0, 1), &[]);
        let mut inst = GenerationInstance::new(&def, &doc, &doc.event_mentions[0], 10).unwrap();
        inst.marked_document.clear();
        let input = build_input(&inst, 100).unwrap();
        assert_eq!(input.len(), inst.blank_template.len() + 4);
    }

    #[test]
    fn gold_fill_joins_with_and() {
        let def = EventTypeDef {
            name: "Justice.ChargeIndict".into(),
            template: "<arg1> charged <arg2> with crime".into(),
            roles: vec![role("Prosecutor", 1), role("Defendant", 2)],
            keywords: vec![],
        };
        let doc = doc_from(
            "Police charged Bilal Mohammed and later Mieralli Yusufu .",
            Span::new(1, 2),
            &[("Defendant", 2, 4), ("Defendant", 6, 8)],
        );
        let ev = &doc.event_mentions[0];
        let inst = GenerationInstance::new(&def, &doc, ev, 100).unwrap();
        let target = fill_gold(&inst, &doc, ev, ArgumentView::Nearest);
        assert_eq!(target.join(" "), "<arg> charged Bilal Mohammed and Mieralli Yusufu with crime");
        let (parsed, _) = parse_filled(&inst, &target).unwrap();
        assert_eq!(parsed, gold_fills(&inst, &doc, ev, ArgumentView::Nearest));
        assert_eq!(parsed.role_fills["Defendant"], vec!["Bilal Mohammed", "Mieralli Yusufu"]);
        assert!(parsed.role_fills["Prosecutor"].is_empty());
    }

    #[test]
    fn blank_generation_parses_empty() {
        let def = public_statement();
        let doc = doc_from("She proposed a tax plan", Span::new(1, 2), &[]);
        let inst = GenerationInstance::new(&def, &doc, &doc.event_mentions[0], 100).unwrap();
        let (fills, a) = parse_filled(&inst, &inst.blank_template).unwrap();
        assert!(fills.is_empty());
        assert_eq!(a.anchor_coverage, 1.0);
    }

    #[test]
    fn table_two_style_parse() {
        let def = public_statement();
        let doc = doc_from("She has proposed a tax plan", Span::new(2, 3), &[]);
        let inst = GenerationInstance::new(&def, &doc, &doc.event_mentions[0], 100).unwrap();
        let gen = toks("<s> She communicated with tax plan about <arg> at <arg> place </s>");
        let (fills, _) = parse_filled(&inst, &gen).unwrap();
        assert_eq!(fills.role_fills["Communicator"], vec!["She"]);
        assert_eq!(fills.role_fills["Participant"], vec!["tax plan"]);
        assert!(fills.role_fills["Topic"].is_empty());
    }

    #[test]
    fn abandoned_template_is_unparseable() {
        let def = public_statement();
        let doc = doc_from("She has proposed a tax plan", Span::new(2, 3), &[]);
        let inst = GenerationInstance::new(&def, &doc, &doc.event_mentions[0], 100).unwrap();
        let gen = toks("She proposed a tax plan");
        assert!(matches!(parse_filled(&inst, &gen), Err(Error::Unparseable { .. })));
    }

    #[test]
    fn filler_containing_anchor_word() {
        let def = public_statement();
        let doc = doc_from("Officials spoke about taxes at home at noon", Span::new(1, 2), &[]);
        let inst = GenerationInstance::new(&def, &doc, &doc.event_mentions[0], 100).unwrap();
        let gen = toks("Officials communicated with <arg> about taxes at home at <arg> place");
        let (fills, _) = parse_filled(&inst, &gen).unwrap();
        assert_eq!(fills.role_fills["Topic"], vec!["taxes at home"]);
        assert!(fills.role_fills["Place"].is_empty());
    }

    #[test]
    fn ground_prefers_closest() {
        let doc = doc_from("x paid y . then x left z", Span::new(6, 7), &[]);
        let g = ground(&doc, Span::new(6, 7), "Giver", "X");
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].span, Span::new(5, 6));
        assert_eq!(g[0].text, "x");
    }

    #[test]
    fn ground_dollar_amount() {
        let doc = doc_from("Dennehy reserved the truck . He paid $280.32 .", Span::new(1, 2), &[]);
        let g = ground(&doc, Span::new(1, 2), "PaymentBarter", "$280.32");
        assert_eq!(g[0].span, Span::new(7, 8));
        assert_eq!(doc.sentence_of(g[0].span.start), Some(0));
    }

    #[test]
    fn ground_splits_on_and_when_needed() {
        let doc = doc_from("Bilal Mohammed was charged , as was Mieralli Yusufu .", Span::new(3, 4), &[]);
        let g = ground(&doc, Span::new(3, 4), "Defendant", "Bilal Mohammed and Mieralli Yusufu");
        let spans: Vec<Span> = g.iter().map(|a| a.span).collect();
        assert_eq!(spans, vec![Span::new(0, 2), Span::new(7, 9)]);
        let whole = doc_from("Johnson and Johnson sued", Span::new(3, 4), &[]);
        let g = ground(&whole, Span::new(3, 4), "Plaintiff", "Johnson and Johnson");
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].span, Span::new(0, 3));
    }
}
