//! End-to-end runs: keyword trigger tagging followed by template-filling
//! argument extraction, with every intermediate result written to disk.
//!
//! The stage functions work on in-memory values so the command line can call
//! them one at a time; [`Pipeline`] chains them through stage files under one
//! output directory and skips any stage whose output already exists.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arggen::train::{build_vocab, encode_pairs, text_pairs, train, TrainConfig, TrainReport};
use crate::arggen::{extract_arguments, ArgumentPrediction, CopyLm, CopyLmConfig, ExtractConfig, GeneratorBackend};
use crate::corpus::{corpus_sentences, load_rams, load_wikievents, read_documents, write_documents, ArgumentView, Document, EventMention};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{align_to_gold_events, score_all_arguments, score_args_head, score_triggers, ScoreReport};
use crate::ontology::{load_ontology, EventOntology};
use crate::span::Span;
use crate::splits::{build_split, SplitMode};
use crate::tapkey::class_vector::{load_keywords, ontology_keywords};
use crate::tapkey::label::{gold_sequences, pseudo_label, sentence_spans, DEFAULT_TAU_I, DEFAULT_TAU_O};
use crate::tapkey::model::O_TAG;
use crate::tapkey::train::{train as train_tapkey, TapKeyReport};
use crate::tapkey::{
    build_class_vector, predict_triggers, ClassVector, ContextEmbedder, ContextEmbedderConfig, EmbeddingBackend, Objective, TaggedSequence,
    TapKeyModel, TapKeyTrainConfig, TriggerPrediction,
};

/// Backend identifier accepted for the generator.
pub const COPY_LM: &str = "copy-lm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// Our own document JSONL, as written by `convert`.
    Documents,
    Wikievents,
    Rams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub format: DataFormat,
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub train_coref: Option<PathBuf>,
    #[serde(default)]
    pub test_coref: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub tau_i: f64,
    pub tau_o: f64,
    pub epochs: usize,
    pub pseudo_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Train the CRF on the gold triggers of the training split after the
    /// pseudo-label phase. Without it the tagger sees keywords only.
    pub use_gold: bool,
    /// `EventType: kw, kw` lines; the ontology's keywords when absent.
    pub keywords: Option<PathBuf>,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            lambda: 0.5,
            alpha: 0.01,
            tau_i: DEFAULT_TAU_I,
            tau_o: DEFAULT_TAU_O,
            epochs: 20,
            pseudo_epochs: 5,
            learning_rate: 0.02,
            batch_size: 16,
            use_gold: true,
            keywords: None,
            seed: 0,
        }
    }
}

impl TaggerConfig {
    fn train_config(&self, epochs: usize, salt: u64) -> TapKeyTrainConfig {
        TapKeyTrainConfig { epochs, batch_size: self.batch_size, learning_rate: self.learning_rate, seed: self.seed.wrapping_add(salt) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub backend: String,
    pub model: CopyLmConfig,
    pub train: TrainConfig,
    /// Start from a saved generator instead of a fresh one.
    pub init_from: Option<PathBuf>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { backend: COPY_LM.into(), model: CopyLmConfig::default(), train: TrainConfig::default(), init_from: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Ontology JSON; the built-in synthetic ontology when absent.
    #[serde(default)]
    pub ontology: Option<PathBuf>,
    pub data: DataConfig,
    #[serde(default = "default_split")]
    pub split: SplitMode,
    #[serde(default = "default_view")]
    pub view: ArgumentView,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Skip the trigger stages and extract arguments for the gold triggers.
    #[serde(default)]
    pub gold_triggers: bool,
    #[serde(default)]
    pub embedder: ContextEmbedderConfig,
    #[serde(default)]
    pub tagger: TaggerConfig,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub extract: ExtractConfig,
}

fn default_split() -> SplitMode {
    SplitMode::Full
}

fn default_view() -> ArgumentView {
    ArgumentView::Nearest
}

impl RunConfig {
    /// Reads TOML, or JSON when the file ends in `.json`. Relative paths are
    /// taken relative to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(read_config_value(path)?, path.parent())
    }

    pub fn from_value(value: serde_json::Value, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.train);
        fix(&mut self.data.test);
        fix(&mut self.output_dir);
        for p in
            [&mut self.ontology, &mut self.data.train_coref, &mut self.data.test_coref, &mut self.tagger.keywords].into_iter().flatten()
        {
            fix(p);
        }
    }

    /// Checks values and spreads the run seed over the components.
    pub fn resolved(mut self) -> Result<Self> {
        if self.generator.backend != COPY_LM {
            return Err(Error::Config(format!("unknown generator backend `{}` (expected `{COPY_LM}`)", self.generator.backend)));
        }
        if !(self.tagger.tau_o <= self.tagger.tau_i) {
            return Err(Error::Config("tau_o must not exceed tau_i".into()));
        }
        self.extract.decode.validate()?;
        self.embedder.seed = self.seed;
        self.tagger.seed = self.seed.wrapping_add(1);
        self.generator.model.seed = self.seed.wrapping_add(2);
        self.generator.train.seed = self.seed.wrapping_add(3);
        Ok(self)
    }

    pub fn load_ontology(&self) -> Result<EventOntology> {
        match &self.ontology {
            Some(p) => load_ontology(p),
            None => Ok(crate::synth::ontology()),
        }
    }
}

/// A config file as a JSON value: TOML, or JSON when the name ends in `.json`.
pub fn read_config_value(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::json(path, 0, &e))
    } else {
        toml::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), line: 0, column: 0, message: e.to_string() })
    }
}

/// Applies `a.b.c=value` to a config value. The right-hand side is read as
/// JSON when it parses, else taken as a string.
pub fn apply_override(config: &mut serde_json::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = config;
    let parts: Vec<&str> = key.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            *node = serde_json::Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("just made an object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Ok(())
}

pub fn load_documents(format: DataFormat, path: &Path, coref: Option<&Path>, ontology: Option<&EventOntology>) -> Result<Vec<Document>> {
    match format {
        DataFormat::Documents => read_documents(path),
        DataFormat::Wikievents => load_wikievents(path, coref, ontology),
        DataFormat::Rams => load_rams(path, ontology),
    }
}

// ---- trigger side ----

/// Fits the distributional embedder on raw text.
pub fn fit_embedder(docs: &[Document], config: ContextEmbedderConfig) -> ContextEmbedder {
    ContextEmbedder::fit(&corpus_sentences(docs), config)
}

/// Keyword lists from a file, or the ontology's own.
pub fn keyword_lists(path: Option<&Path>, ontology: &EventOntology) -> Result<Vec<(String, Vec<String>)>> {
    match path {
        Some(p) => load_keywords(p),
        None => Ok(ontology_keywords(ontology).into_iter().filter(|(_, k)| !k.is_empty()).collect()),
    }
}

/// One class vector per event type whose keywords occur in `sentences`;
/// types without any occurrence are skipped with a warning.
pub fn class_vectors<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    keywords: &[(String, Vec<String>)],
    sentences: &[Vec<String>],
) -> Vec<ClassVector> {
    keywords
        .iter()
        .filter_map(|(ty, kws)| match build_class_vector(backend, ty, kws, sentences) {
            Ok(cv) => Some(cv),
            Err(e) => {
                log::warn!("{ty}: {e}");
                None
            }
        })
        .collect()
}

/// Pseudo-labels of one sentence, by tag name: `"O"`, an event type, or
/// `None` where the similarity was inconclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelRecord {
    pub doc_id: String,
    pub sent_idx: usize,
    pub tags: Vec<Option<String>>,
}

pub const O_NAME: &str = "O";

/// Pseudo-labels every sentence with at least one confident event tag.
pub fn pseudo_label_docs<B: EmbeddingBackend + Sync + ?Sized>(
    backend: &B,
    class_vectors: &[ClassVector],
    docs: &[Document],
    tau_i: f64,
    tau_o: f64,
) -> Vec<PseudoLabelRecord> {
    docs.par_iter()
        .flat_map_iter(|doc| {
            sentence_spans(doc)
                .into_iter()
                .enumerate()
                .filter_map(|(sent_idx, s)| {
                    let embs = backend.token_embeddings(&doc.tokens[s.start..s.end]);
                    let tags = pseudo_label(class_vectors, &embs, tau_i, tau_o);
                    if !tags.iter().any(|t| t.is_some_and(|k| k != O_TAG)) {
                        return None;
                    }
                    let tags = tags
                        .into_iter()
                        .map(|t| t.map(|k| if k == O_TAG { O_NAME.to_string() } else { class_vectors[k - 1].event_type.clone() }))
                        .collect();
                    Some(PseudoLabelRecord { doc_id: doc.doc_id.clone(), sent_idx, tags })
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaggerReport {
    pub classes: Vec<String>,
    pub pseudo: TapKeyReport,
    pub gold: TapKeyReport,
}

/// Trains the tagger: token classification on pseudo-labels, then (with
/// `use_gold`) the CRF on gold triggers. The trained classes are the types
/// annotated in `docs` that have a class vector, or every class vector when
/// gold triggers are not used.
pub fn train_tagger<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    all_vectors: &[ClassVector],
    docs: &[Document],
    pseudo: &[PseudoLabelRecord],
    config: &TaggerConfig,
) -> Result<(TapKeyModel, TaggerReport)> {
    let vectors: Vec<ClassVector> = if config.use_gold {
        let seen: Vec<&str> = docs.iter().flat_map(|d| d.event_mentions.iter().map(|e| e.event_type.as_str())).collect();
        all_vectors.iter().filter(|c| seen.contains(&c.event_type.as_str())).cloned().collect()
    } else {
        all_vectors.to_vec()
    };
    if vectors.is_empty() {
        return Err(Error::Config("no event type has both training data and a class vector".into()));
    }
    let mut model = TapKeyModel::new(vectors, config.lambda, config.alpha)?;
    let classes = model.classes().to_vec();
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut pseudo_seqs = Vec::new();
    for r in pseudo {
        let Some(doc) = by_id.get(r.doc_id.as_str()) else {
            log::warn!("pseudo-label for unknown document {}", r.doc_id);
            continue;
        };
        let Some(s) = sentence_spans(doc).get(r.sent_idx).copied() else { continue };
        let tags = r
            .tags
            .iter()
            .map(|t| match t.as_deref() {
                Some(O_NAME) => Some(O_TAG),
                Some(ty) => classes.iter().position(|c| c == ty).map(|k| k + 1),
                None => None,
            })
            .collect();
        pseudo_seqs.push(TaggedSequence { embeddings: backend.token_embeddings(&doc.tokens[s.start..s.end]), tags });
    }
    let mut report = TaggerReport { classes: classes.clone(), ..Default::default() };
    if !pseudo_seqs.is_empty() && config.pseudo_epochs > 0 {
        report.pseudo =
            train_tapkey(&mut model, &pseudo_seqs, Objective::TokenClassification, &config.train_config(config.pseudo_epochs, 0))?;
    }
    if config.use_gold && config.epochs > 0 {
        let gold = gold_sequences(docs, backend, &classes);
        report.gold = train_tapkey(&mut model, &gold, Objective::Crf, &config.train_config(config.epochs, 1))?;
    }
    Ok((model, report))
}

/// Adds every class vector the model does not know yet, so unseen types can
/// be predicted; no other parameter changes.
pub fn extend_classes(model: &mut TapKeyModel, vectors: &[ClassVector]) -> Result<Vec<String>> {
    let mut added = Vec::new();
    for cv in vectors {
        if model.tag_of_class(&cv.event_type).is_none() {
            model.add_class(cv.clone())?;
            added.push(cv.event_type.clone());
        }
    }
    Ok(added)
}

pub fn predict_all<B: EmbeddingBackend + Sync + ?Sized>(model: &TapKeyModel, backend: &B, docs: &[Document]) -> Vec<TriggerPrediction> {
    docs.par_iter().flat_map_iter(|d| predict_triggers(model, backend, d)).collect()
}

/// Event mentions (without arguments) for predicted triggers, keyed by
/// document. Ids are `<doc_id>-t<n>` in prediction order.
pub fn predicted_events(triggers: &[TriggerPrediction]) -> BTreeMap<String, Vec<EventMention>> {
    let mut out: BTreeMap<String, Vec<EventMention>> = BTreeMap::new();
    for t in triggers {
        let evs = out.entry(t.doc_id.clone()).or_default();
        evs.push(EventMention {
            event_id: format!("{}-t{}", t.doc_id, evs.len()),
            event_type: t.event_type.clone(),
            trigger_span: t.span,
            arguments: Vec::new(),
        });
    }
    out
}

/// Gold triggers in prediction form, for the bypass mode.
pub fn gold_triggers(docs: &[Document]) -> Vec<TriggerPrediction> {
    docs.iter()
        .flat_map(|d| {
            d.event_mentions.iter().map(move |e| TriggerPrediction {
                doc_id: d.doc_id.clone(),
                sent_idx: d.sentence_of(e.trigger_span.start).unwrap_or(0),
                span: e.trigger_span,
                event_type: e.event_type.clone(),
                score: 1.0,
            })
        })
        .collect()
}

// ---- argument side ----

/// Trains a copy generator on the gold events of `train_docs`. The
/// vocabulary also covers the words of `unlabeled`, so test documents can be
/// copied from.
pub fn train_generator(
    train_docs: &[Document],
    unlabeled: &[Document],
    ontology: &EventOntology,
    view: ArgumentView,
    config: &GeneratorConfig,
    extract: &ExtractConfig,
) -> Result<(CopyLm, TrainReport)> {
    let pairs = text_pairs(train_docs, ontology, view, extract.max_doc_len, extract.max_input_len)?;
    let mut model = match &config.init_from {
        Some(dir) => CopyLm::load(dir)?,
        None => {
            let mut vocab = build_vocab(&pairs, ontology);
            for d in unlabeled {
                for t in &d.tokens {
                    vocab.insert(t);
                }
            }
            CopyLm::new(vocab, config.model.clone())
        }
    };
    let examples = encode_pairs(model.vocab(), &pairs)?;
    let report = train(&mut model, &examples, &config.train, |_, _, _| Ok(()))?;
    Ok((model, report))
}

/// The generated sequence for one event, kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub doc_id: String,
    pub event_id: String,
    pub output: String,
    pub unparseable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub instances: usize,
    pub unparseable: usize,
    pub truncated: usize,
    pub generations: Vec<GenerationRecord>,
}

/// Extracts arguments for the given events of every document. Events of
/// types the ontology lacks are skipped with a warning.
pub fn extract_all<B: GeneratorBackend + Sync>(
    backend: &B,
    docs: &[Document],
    events: &BTreeMap<String, Vec<EventMention>>,
    ontology: &EventOntology,
    config: &ExtractConfig,
) -> Result<(Vec<ArgumentPrediction>, ExtractSummary)> {
    let jobs: Vec<(&Document, &EventMention)> = docs
        .iter()
        .flat_map(|d| events.get(&d.doc_id).into_iter().flatten().map(move |e| (d, e)))
        .filter(|(d, e)| {
            let known = ontology.get(&e.event_type).is_some();
            if !known {
                log::warn!("{}: no template for {}", d.doc_id, e.event_type);
            }
            known
        })
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(d, e)| extract_arguments(backend, d, e, ontology, config).map(|x| (d.doc_id.as_str(), e.event_id.as_str(), x)))
        .collect::<Result<_>>()?;
    let mut summary = ExtractSummary { instances: results.len(), ..Default::default() };
    let mut preds = Vec::new();
    for (doc_id, event_id, x) in results {
        summary.unparseable += usize::from(x.unparseable);
        summary.truncated += usize::from(x.truncated);
        summary.generations.push(GenerationRecord {
            doc_id: doc_id.to_string(),
            event_id: event_id.to_string(),
            output: x.output.join(" "),
            unparseable: x.unparseable,
        });
        preds.extend(crate::arggen::extract::to_predictions(doc_id, event_id, &x.arguments));
    }
    Ok((preds, summary))
}

/// Trigger identification and classification plus head-matched argument
/// identification and classification, in that order. Argument predictions
/// made for predicted triggers are first mapped onto the gold events.
pub fn score_run(
    gold: &[Document],
    triggers: &[TriggerPrediction],
    args: &[ArgumentPrediction],
) -> Result<(Vec<ScoreReport>, Vec<ScoreReport>)> {
    let (ti, tc) = score_triggers(triggers, gold)?;
    let aligned = align_args(gold, triggers, args);
    let ai = score_args_head(&aligned, gold, false)?;
    let ac = score_args_head(&aligned, gold, true)?;
    Ok((vec![ti, tc, ai, ac], score_all_arguments(&aligned, gold)?))
}

/// Maps argument predictions for predicted triggers onto gold event ids.
pub fn align_args(gold: &[Document], triggers: &[TriggerPrediction], args: &[ArgumentPrediction]) -> Vec<ArgumentPrediction> {
    let keys: Vec<(String, String, Span, String)> = predicted_events(triggers)
        .into_iter()
        .flat_map(|(doc_id, evs)| evs.into_iter().map(move |e| (doc_id.clone(), e.event_id, e.trigger_span, e.event_type)))
        .collect();
    align_to_gold_events(args, &keys, gold)
}

// ---- the chained run ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Convert,
    Embedder,
    ClassVectors,
    PseudoLabel,
    TrainTrigger,
    PredictTrigger,
    TrainArgs,
    ExtractArgs,
    Score,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Convert,
        Stage::Embedder,
        Stage::ClassVectors,
        Stage::PseudoLabel,
        Stage::TrainTrigger,
        Stage::PredictTrigger,
        Stage::TrainArgs,
        Stage::ExtractArgs,
        Stage::Score,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Convert => "convert",
            Stage::Embedder => "embedder",
            Stage::ClassVectors => "class-vectors",
            Stage::PseudoLabel => "pseudo-label",
            Stage::TrainTrigger => "train-trigger",
            Stage::PredictTrigger => "predict-trigger",
            Stage::TrainArgs => "train-args",
            Stage::ExtractArgs => "extract-args",
            Stage::Score => "score",
        }
    }

    /// The file or directory whose presence marks the stage as done.
    pub fn output(self) -> &'static str {
        match self {
            Stage::Convert => "test.docs.jsonl",
            Stage::Embedder => "embedder.json",
            Stage::ClassVectors => "class_vectors.jsonl",
            Stage::PseudoLabel => "pseudo_labels.jsonl",
            Stage::TrainTrigger => "tagger.json",
            Stage::PredictTrigger => "triggers.jsonl",
            Stage::TrainArgs => "generator",
            Stage::ExtractArgs => "arguments.jsonl",
            Stage::Score => "scores.json",
        }
    }

    fn is_trigger_stage(self) -> bool {
        matches!(self, Stage::Embedder | Stage::ClassVectors | Stage::PseudoLabel | Stage::TrainTrigger)
    }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stages_run: Vec<String>,
    pub stages_reused: Vec<String>,
    pub reports: Vec<ScoreReport>,
}

pub struct Pipeline {
    config: RunConfig,
    ontology: EventOntology,
}

pub const MANIFEST: &str = "config.json";

impl Pipeline {
    /// Resolves the config and records it in the output directory. An
    /// existing run directory is reused only if its manifest matches.
    pub fn new(config: RunConfig) -> Result<Self> {
        let config = config.resolved()?;
        let ontology = config.load_ontology()?;
        let dir = &config.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = dir.join(MANIFEST);
        if manifest.exists() {
            let old: serde_json::Value = jsonl::read_json(&manifest)?;
            let new = serde_json::to_value(&config).map_err(|e| Error::json(&manifest, 0, &e))?;
            if old != new {
                return Err(Error::Config(format!("{} holds a run with a different config", dir.display())));
            }
        } else {
            jsonl::write_json(&manifest, &config)?;
        }
        Ok(Pipeline { config, ontology })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    pub fn run(&self) -> Result<RunSummary> {
        let mut summary = RunSummary { stages_run: Vec::new(), stages_reused: Vec::new(), reports: Vec::new() };
        for stage in Stage::ALL {
            if self.config.gold_triggers && stage.is_trigger_stage() {
                continue;
            }
            let out = self.path(stage.output());
            if out.exists() {
                log::info!("stage {}: reusing {}", stage.name(), out.display());
                summary.stages_reused.push(stage.name().into());
                continue;
            }
            log::info!("stage {}", stage.name());
            self.run_stage(stage).map_err(|e| Error::Stage { stage: stage.name().into(), source: Box::new(e) })?;
            summary.stages_run.push(stage.name().into());
        }
        summary.reports = jsonl::read_json(self.path(Stage::Score.output()))?;
        Ok(summary)
    }

    fn train_docs(&self) -> Result<Vec<Document>> {
        read_documents(self.path("train.docs.jsonl"))
    }

    fn test_docs(&self) -> Result<Vec<Document>> {
        read_documents(self.path("test.docs.jsonl"))
    }

    fn embedder(&self) -> Result<ContextEmbedder> {
        ContextEmbedder::load(&self.path(Stage::Embedder.output()))
    }

    fn run_stage(&self, stage: Stage) -> Result<()> {
        let cfg = &self.config;
        let out = self.path(stage.output());
        match stage {
            Stage::Convert => {
                let d = &cfg.data;
                let train = load_documents(d.format, &d.train, d.train_coref.as_deref(), Some(&self.ontology))?;
                let test = load_documents(d.format, &d.test, d.test_coref.as_deref(), Some(&self.ontology))?;
                let (train, kept) = build_split(&train, cfg.split);
                log::info!("training split keeps {} event types", kept.len());
                commit(&self.path("train.docs.jsonl"), |p| write_documents(p, &train))?;
                commit(&out, |p| write_documents(p, &test))
            }
            Stage::Embedder => {
                let mut docs = self.train_docs()?;
                docs.extend(self.test_docs()?);
                let emb = fit_embedder(&docs, cfg.embedder.clone());
                commit(&out, |p| emb.save(p))
            }
            Stage::ClassVectors => {
                let emb = self.embedder()?;
                let kws = keyword_lists(cfg.tagger.keywords.as_deref(), &self.ontology)?;
                let cvs = class_vectors(&emb, &kws, &corpus_sentences(&self.train_docs()?));
                if cvs.is_empty() {
                    return Err(Error::Config("no keyword occurs in the training text".into()));
                }
                commit(&out, |p| jsonl::write(p, &cvs))
            }
            Stage::PseudoLabel => {
                let emb = self.embedder()?;
                let cvs: Vec<ClassVector> = jsonl::read(self.path(Stage::ClassVectors.output()))?;
                let recs = pseudo_label_docs(&emb, &cvs, &self.train_docs()?, cfg.tagger.tau_i, cfg.tagger.tau_o);
                commit(&out, |p| jsonl::write(p, &recs))
            }
            Stage::TrainTrigger => {
                let emb = self.embedder()?;
                let cvs: Vec<ClassVector> = jsonl::read(self.path(Stage::ClassVectors.output()))?;
                let pseudo: Vec<PseudoLabelRecord> = jsonl::read(self.path(Stage::PseudoLabel.output()))?;
                let (model, report) = train_tagger(&emb, &cvs, &self.train_docs()?, &pseudo, &cfg.tagger)?;
                jsonl::write_json(self.path("tagger_report.json"), &report)?;
                commit(&out, |p| model.save(p))
            }
            Stage::PredictTrigger => {
                let test = self.test_docs()?;
                let triggers = if cfg.gold_triggers {
                    gold_triggers(&test)
                } else {
                    let emb = self.embedder()?;
                    let mut model = TapKeyModel::load(&self.path(Stage::TrainTrigger.output()))?;
                    let cvs: Vec<ClassVector> = jsonl::read(self.path(Stage::ClassVectors.output()))?;
                    let added = extend_classes(&mut model, &cvs)?;
                    if !added.is_empty() {
                        log::info!("predicting {} types unseen in training: {}", added.len(), added.join(", "));
                    }
                    predict_all(&model, &emb, &test)
                };
                commit(&out, |p| jsonl::write(p, &triggers))
            }
            Stage::TrainArgs => {
                let (model, report) =
                    train_generator(&self.train_docs()?, &self.test_docs()?, &self.ontology, cfg.view, &cfg.generator, &cfg.extract)?;
                jsonl::write_json(self.path("generator_report.json"), &report)?;
                commit(&out, |p| model.save(p))
            }
            Stage::ExtractArgs => {
                let model = CopyLm::load(&self.path(Stage::TrainArgs.output()))?;
                let triggers: Vec<TriggerPrediction> = jsonl::read(self.path(Stage::PredictTrigger.output()))?;
                let test = self.test_docs()?;
                let (args, mut summary) = extract_all(&model, &test, &predicted_events(&triggers), &self.ontology, &cfg.extract)?;
                jsonl::write(self.path("generations.jsonl"), &std::mem::take(&mut summary.generations))?;
                jsonl::write_json(self.path("extract_summary.json"), &summary)?;
                commit(&out, |p| jsonl::write(p, &args))
            }
            Stage::Score => {
                let test = self.test_docs()?;
                let triggers: Vec<TriggerPrediction> = jsonl::read(self.path(Stage::PredictTrigger.output()))?;
                let args: Vec<ArgumentPrediction> = jsonl::read(self.path(Stage::ExtractArgs.output()))?;
                let (main, all) = score_run(&test, &triggers, &args)?;
                jsonl::write_json(self.path("arg_scores.json"), &all)?;
                std::fs::write(self.path("scores.txt"), crate::metrics::render_table(&main))
                    .map_err(|e| Error::io(self.path("scores.txt"), e))?;
                commit(&out, |p| jsonl::write_json(p, &main))
            }
        }
    }
}

/// Writes through a temporary sibling and renames it into place, so an
/// interrupted stage never leaves an output that looks finished.
fn commit(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    if tmp.is_dir() {
        std::fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    } else if tmp.exists() {
        std::fs::remove_file(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    write(&tmp)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
