use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EventMention};
use crate::error::Result;
use crate::ontology::EventOntology;
use crate::span::Span;
use crate::template::{build_input, ground, parse_filled, GenerationInstance, GroundedArgument};

use super::backend::GeneratorBackend;
use super::decode::{beam_search, greedy_decode, Candidate, DecodeConfig};
use super::rerank::rerank;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub decode: DecodeConfig,
    /// Document tokens kept around the trigger before building the input.
    pub max_doc_len: usize,
    pub max_input_len: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { decode: DecodeConfig::default(), max_doc_len: 400, max_input_len: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub arguments: Vec<GroundedArgument>,
    pub output: Vec<String>,
    /// The chosen output could not be aligned with the template.
    pub unparseable: bool,
    pub truncated: bool,
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentPrediction {
    pub doc_id: String,
    pub event_id: String,
    pub role: String,
    pub span: Span,
    pub text: String,
}

/// Candidates for one instance, best first after optional reranking.
pub fn generate<B: GeneratorBackend>(
    backend: &B,
    instance: &GenerationInstance,
    ontology: &EventOntology,
    config: &ExtractConfig,
) -> Result<Candidate> {
    let words = build_input(instance, config.max_input_len)?;
    let input = backend.vocab().encode(&words);
    let d = &config.decode;
    if d.beam_width == 1 {
        return greedy_decode(backend, &input, d.copy_restrict, d.max_output_len);
    }
    let mut beams = beam_search(backend, &input, d)?;
    if d.rerank && beams.len() > 1 {
        rerank(backend, &input, beams, instance, ontology)
    } else {
        Ok(beams.swap_remove(0))
    }
}

/// Generates the filled template for one trigger and grounds its fillers in the document.
pub fn extract_arguments<B: GeneratorBackend>(
    backend: &B,
    doc: &Document,
    event: &EventMention,
    ontology: &EventOntology,
    config: &ExtractConfig,
) -> Result<Extraction> {
    let def = ontology.template_for(&event.event_type)?;
    let instance = GenerationInstance::new(def, doc, event, config.max_doc_len)?;
    let best = generate(backend, &instance, ontology, config)?;
    let output = backend.vocab().decode(&best.tokens);
    let filled = match parse_filled(&instance, &output) {
        Ok((filled, _)) => filled,
        Err(e) => {
            log::warn!("{}/{}: {e}", doc.doc_id, event.event_id);
            return Ok(Extraction { arguments: Vec::new(), output, unparseable: true, truncated: best.truncated });
        }
    };
    let mut seen = HashSet::new();
    let mut arguments = Vec::new();
    for (role, filler) in filled.filled() {
        for arg in ground(doc, event.trigger_span, role, filler) {
            if seen.insert((arg.role.clone(), arg.span)) {
                arguments.push(arg);
            }
        }
    }
    Ok(Extraction { arguments, output, unparseable: false, truncated: best.truncated })
}

pub fn to_predictions(doc_id: &str, event_id: &str, args: &[GroundedArgument]) -> Vec<ArgumentPrediction> {
    args.iter()
        .map(|a| ArgumentPrediction {
            doc_id: doc_id.to_string(),
            event_id: event_id.to_string(),
            role: a.role.clone(),
            span: a.span,
            text: a.text.clone(),
        })
        .collect()
}
