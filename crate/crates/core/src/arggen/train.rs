use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ArgumentView, Document};
use crate::error::{Error, Result};
use crate::numeric::Adam;
use crate::ontology::EventOntology;
use crate::template::{build_input, fill_gold, symbols, GenerationInstance};

use super::backend::TrainableBackend;
use super::vocab::{TokenId, Vocab, EOS_ID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 30, batch_size: 4, learning_rate: 0.003, seed: 7 }
    }
}

/// One (input, target) pair as words, before encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPair {
    pub doc_id: String,
    pub event_id: String,
    pub input: Vec<String>,
    pub target: Vec<String>,
}

/// Encoded pair; the target ends with end-of-sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub input: Vec<TokenId>,
    pub target: Vec<TokenId>,
}

/// Builds a pair for every event whose type the ontology knows.
pub fn text_pairs(
    docs: &[Document],
    ontology: &EventOntology,
    view: ArgumentView,
    max_doc_len: usize,
    max_input_len: usize,
) -> Result<Vec<TextPair>> {
    let mut out = Vec::new();
    for doc in docs {
        for event in &doc.event_mentions {
            let Some(def) = ontology.get(&event.event_type) else {
                log::warn!("{}: skipping event {} of unknown type {}", doc.doc_id, event.event_id, event.event_type);
                continue;
            };
            let inst = GenerationInstance::new(def, doc, event, max_doc_len)?;
            out.push(TextPair {
                doc_id: doc.doc_id.clone(),
                event_id: event.event_id.clone(),
                input: build_input(&inst, max_input_len)?,
                target: fill_gold(&inst, doc, event, view),
            });
        }
    }
    Ok(out)
}

/// Vocabulary over every input and target word, plus the ontology's
/// statement words so clarifications can be scored.
pub fn build_vocab(pairs: &[TextPair], ontology: &EventOntology) -> Vocab {
    let mut v = Vocab::build(std::iter::empty());
    for w in ["is", "a", "."] {
        v.insert(w);
    }
    for t in ontology.entity_types() {
        for w in t.statement_phrase.split_whitespace() {
            v.insert(w);
        }
    }
    for p in pairs {
        for w in p.input.iter().chain(&p.target) {
            v.insert(w);
        }
    }
    v
}

/// Encodes pairs; a target word outside the vocabulary is an error.
pub fn encode_pairs(vocab: &Vocab, pairs: &[TextPair]) -> Result<Vec<Example>> {
    pairs
        .iter()
        .map(|p| {
            let mut target = vocab.encode_strict(&p.target)?;
            target.push(EOS_ID);
            Ok(Example { input: vocab.encode(&p.input), target })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mean per-token negative log-likelihood of `examples` and its gradient.
pub fn batch_loss<B: TrainableBackend>(backend: &B, examples: &[&Example], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    let mut tokens = 0usize;
    for ex in examples {
        loss += backend.nll_and_grad(&ex.input, &ex.target, grad);
        tokens += ex.target.len();
    }
    let scale = 1.0 / tokens.max(1) as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    loss * scale
}

/// Adam over shuffled mini-batches; `after_epoch` runs after every epoch
/// (typically to write a checkpoint).
pub fn train<B, F>(backend: &mut B, examples: &[Example], config: &TrainConfig, mut after_epoch: F) -> Result<TrainReport>
where
    B: TrainableBackend,
    F: FnMut(usize, f64, &B) -> Result<()>,
{
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let v = backend.vocab().len() as TokenId;
    if let Some(bad) = examples.iter().flat_map(|e| e.input.iter().chain(&e.target)).find(|&&t| t >= v) {
        return Err(Error::OutOfVocabulary(format!("token id {bad}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(backend.params().len(), config.learning_rate);
    let mut grad = vec![0.0; backend.params().len()];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut tokens = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let n: usize = batch.iter().map(|e| e.target.len()).sum();
            let loss = batch_loss(backend, &batch, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            adam.step(backend.params_mut(), &grad);
            total += loss * n as f64;
            tokens += n;
        }
        let mean = total / tokens.max(1) as f64;
        log::info!("epoch {epoch}: loss {mean:.4}");
        report.epoch_losses.push(mean);
        after_epoch(epoch, mean, backend)?;
    }
    Ok(report)
}

/// Words a target may contain besides the input's: the placeholder and "and".
pub fn target_is_copyable(pair: &TextPair) -> bool {
    pair.target.iter().all(|w| w == symbols::PLACEHOLDER || w == symbols::AND || pair.input.contains(w))
}
