//! Reranking beam candidates with entity-type clarification statements.

use crate::error::Result;
use crate::ontology::EventOntology;
use crate::template::{parse_filled, FilledTemplate, GenerationInstance};

use super::backend::GeneratorBackend;
use super::decode::Candidate;
use super::vocab::TokenId;

/// The statements for one filler: one per allowed entity type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clarification {
    pub role: String,
    pub filler: String,
    pub statements: Vec<Vec<String>>,
}

/// `"<filler> is a <phrase> ."` for every filler of a type-constrained role.
/// Roles that accept any entity type get no statements.
pub fn clarifications(filled: &FilledTemplate, ontology: &EventOntology, event_type: &str) -> Result<Vec<Clarification>> {
    let mut out = Vec::new();
    for (role, filler) in filled.filled() {
        let types = ontology.valid_entity_types(event_type, role)?;
        if types.iter().any(|t| t.is_universal()) {
            continue;
        }
        let statements = types
            .iter()
            .map(|t| {
                let mut s: Vec<String> = filler.split_whitespace().map(str::to_string).collect();
                s.push("is".into());
                s.push("a".into());
                s.extend(t.statement_phrase.split_whitespace().map(str::to_string));
                s.push(".".into());
                s
            })
            .collect();
        out.push(Clarification { role: role.to_string(), filler: filler.to_string(), statements });
    }
    Ok(out)
}

/// Sets `rerank_score` on every candidate: its generation log-probability plus,
/// for each clarified filler, the best-scoring statement's log-probability as a
/// continuation of the filled template. Candidates that do not parse keep
/// their generation score.
pub fn score_candidates<B: GeneratorBackend>(
    backend: &B,
    input: &[TokenId],
    candidates: &mut [Candidate],
    instance: &GenerationInstance,
    ontology: &EventOntology,
) -> Result<()> {
    let ctx = backend.encode(input);
    let vocab = backend.vocab();
    for cand in candidates.iter_mut() {
        let words = vocab.decode(&cand.tokens);
        let bonus = match parse_filled(instance, &words) {
            Ok((filled, _)) => {
                let mut total = 0.0;
                for c in clarifications(&filled, ontology, &instance.event_type)? {
                    total += c
                        .statements
                        .iter()
                        .map(|s| backend.score_continuation(&ctx, &cand.tokens, &vocab.encode(s)))
                        .fold(f64::NEG_INFINITY, f64::max);
                }
                total
            }
            Err(e) => {
                log::debug!("{}/{}: unparseable candidate: {e}", instance.doc_id, instance.event_id);
                0.0
            }
        };
        cand.rerank_score = Some(cand.gen_logprob + bonus);
    }
    Ok(())
}

/// Index of the best candidate by rerank score; ties go to the higher
/// generation score, then the earlier beam.
pub fn best_index(candidates: &[Candidate]) -> Option<usize> {
    let key = |c: &Candidate| (c.rerank_score.unwrap_or(c.gen_logprob), c.gen_logprob);
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                let (s, g) = key(c);
                let (bs, bg) = key(&candidates[b]);
                if s > bs || (s == bs && g > bg) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Scores the candidates and returns the winner. Panics on an empty list.
pub fn rerank<B: GeneratorBackend>(
    backend: &B,
    input: &[TokenId],
    mut candidates: Vec<Candidate>,
    instance: &GenerationInstance,
    ontology: &EventOntology,
) -> Result<Candidate> {
    assert!(!candidates.is_empty(), "rerank needs at least one candidate");
    score_candidates(backend, input, &mut candidates, instance, ontology)?;
    let best = best_index(&candidates).expect("non-empty");
    Ok(candidates.swap_remove(best))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::arggen::decode::{beam_search, greedy_decode, DecodeConfig};
    use crate::arggen::mock::{ScriptedBackend, UniformBackend};
    use crate::arggen::vocab::Vocab;
    use crate::corpus::{Document, EventMention};
    use crate::span::Span;
    use crate::template::build_input;

    pub(crate) fn statement_ontology() -> EventOntology {
        EventOntology::from_json_str(
            r#"{
              "entity_types": [
                {"name": "PER", "statement_phrase": "person"},
                {"name": "ORG", "statement_phrase": "organization"},
                {"name": "PERORGGPE", "statement_phrase": "person/organization/country"}
              ],
              "event_types": [{
                "name": "Contact.Statement",
                "template": "<arg1> communicated with <arg2> about <arg3> at <arg4> place",
                "roles": [
                  {"name": "Speaker", "slot": 1, "entity_types": ["PERORGGPE"]},
                  {"name": "Participant", "slot": 2, "entity_types": ["PERORGGPE"]},
                  {"name": "Topic", "slot": 3, "entity_types": ["ANY"]},
                  {"name": "Place", "slot": 4, "entity_types": ["PER", "ORG"]}
                ],
                "keywords": ["proposed"]
              }]
            }"#,
            std::path::Path::new("inline"),
        )
        .unwrap()
    }

    pub(crate) fn statement_instance(ont: &EventOntology) -> (Document, GenerationInstance) {
        let tokens: Vec<String> =
            "She has proposed a tax plan that would require millionaires to pay more taxes .".split(' ').map(str::to_string).collect();
        let event = EventMention {
            event_id: "e1".into(),
            event_type: "Contact.Statement".into(),
            trigger_span: Span::new(2, 3),
            arguments: vec![],
        };
        let doc = Document {
            doc_id: "d".into(),
            sentence_boundaries: vec![Span::new(0, tokens.len())],
            tokens,
            entity_mentions: vec![],
            event_mentions: vec![event.clone()],
            coref_clusters: vec![],
        };
        let inst = GenerationInstance::new(ont.template_for("Contact.Statement").unwrap(), &doc, &event, 100).unwrap();
        (doc, inst)
    }

    /// A scripted model that prefers the wrong reading. Nothing in the script
    /// continues a filled template with "tax plan is a ...", so that statement
    /// only gets the floor probability.
    pub(crate) fn statement_backend(inst: &GenerationInstance) -> (ScriptedBackend, Vec<TokenId>) {
        let wrong = "She communicated with tax plan about <arg> at <arg> place";
        let right = "She communicated with <arg> about tax plan at <arg> place";
        let ok_she = "She is a person/organization/country .";
        let mut b = ScriptedBackend::new(Vocab::build(build_input(inst, 100).unwrap().iter().map(String::as_str)), 1e-4);
        b.script(&format!("{wrong} </s>"), 0.55)
            .script(&format!("{right} </s>"), 0.45)
            .script(&format!("{wrong} {ok_she}"), 0.05)
            .script(&format!("{right} {ok_she}"), 0.05);
        let input = b.vocab().encode(&build_input(inst, 100).unwrap());
        (b, input)
    }

    #[test]
    fn clarification_statements() {
        let ont = statement_ontology();
        let mut f = FilledTemplate::default();
        f.role_fills.insert("Speaker".into(), vec!["She".into()]);
        f.role_fills.insert("Topic".into(), vec!["tax plan".into()]);
        f.role_fills.insert("Place".into(), vec!["Paris".into()]);
        f.role_fills.insert("Participant".into(), vec![]);
        let c = clarifications(&f, &ont, "Contact.Statement").unwrap();
        assert_eq!(c.len(), 2);
        let place = c.iter().find(|c| c.role == "Place").unwrap();
        assert_eq!(place.statements.len(), 2);
        let she = c.iter().find(|c| c.role == "Speaker").unwrap();
        assert_eq!(she.statements[0].join(" "), "She is a person/organization/country .");
    }

    #[test]
    fn greedy_error_is_fixed_by_reranking() {
        let ont = statement_ontology();
        let (_, inst) = statement_instance(&ont);
        let (b, input) = statement_backend(&inst);
        let g = greedy_decode(&b, &input, true, 30).unwrap();
        let (filled, _) = parse_filled(&inst, &b.vocab().decode(&g.tokens)).unwrap();
        assert_eq!(filled.role_fills["Participant"], vec!["tax plan"]);

        let beams = beam_search(&b, &input, &DecodeConfig::default()).unwrap();
        assert_eq!(beams[0].tokens, g.tokens);
        let best = rerank(&b, &input, beams, &inst, &ont).unwrap();
        let (filled, _) = parse_filled(&inst, &b.vocab().decode(&best.tokens)).unwrap();
        assert!(filled.role_fills["Participant"].is_empty());
        assert_eq!(filled.role_fills["Topic"], vec!["tax plan"]);
        assert_eq!(filled.role_fills["Speaker"], vec!["She"]);
    }

    #[test]
    fn hand_computed_scores() {
        // Two candidates differing only in whether the Place filler is in type;
        // the uniform model gives every statement the same score, so the sum
        // is the generation score plus one statement per clarified filler.
        let ont = statement_ontology();
        let (_, inst) = statement_instance(&ont);
        let vocab = Vocab::build(build_input(&inst, 100).unwrap().iter().map(String::as_str));
        let b = UniformBackend { vocab: vocab.clone() };
        let input = vocab.encode(&build_input(&inst, 100).unwrap());
        let toks = |s: &str| vocab.encode(&s.split(' ').collect::<Vec<_>>());
        let one = Candidate {
            tokens: toks("She communicated with <arg> about <arg> at <arg> place"),
            gen_logprob: -3.0,
            rerank_score: None,
            truncated: false,
        };
        let two = Candidate { gen_logprob: -2.0, ..one.clone() };
        let mut cands = vec![one, two];
        score_candidates(&b, &input, &mut cands, &inst, &ont).unwrap();
        let per_token = -(vocab.len() as f64).ln();
        // "She is a person/organization/country ." is five tokens.
        assert!((cands[0].rerank_score.unwrap() - (-3.0 + 5.0 * per_token)).abs() < 1e-9);
        assert_eq!(best_index(&cands), Some(1));
    }

    #[test]
    fn single_candidate_unchanged() {
        let ont = statement_ontology();
        let (_, inst) = statement_instance(&ont);
        let (b, input) = statement_backend(&inst);
        let c = Candidate { tokens: vec![], gen_logprob: -1.0, rerank_score: None, truncated: false };
        let best = rerank(&b, &input, vec![c.clone()], &inst, &ont).unwrap();
        assert_eq!(best.tokens, c.tokens);
        assert_eq!(best.gen_logprob, c.gen_logprob);
    }

    #[test]
    fn ties_prefer_generation_score_then_rank() {
        let c = |g: f64, r: f64| Candidate { tokens: vec![], gen_logprob: g, rerank_score: Some(r), truncated: false };
        assert_eq!(best_index(&[c(-2.0, -5.0), c(-1.0, -5.0)]), Some(1));
        assert_eq!(best_index(&[c(-1.0, -5.0), c(-1.0, -5.0)]), Some(0));
    }
}
