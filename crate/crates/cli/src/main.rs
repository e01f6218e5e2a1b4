//! `evext`: document-level event extraction from the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::Value;

use evext::arggen::{CopyLm, ExtractConfig};
use evext::corpus::stats::distance_stats;
use evext::corpus::{read_documents, write_documents, write_wikievents, ArgumentView, Document};
use evext::jsonl;
use evext::metrics::{render_table, score_all_arguments, score_rams_span, score_triggers, ScoreReport};
use evext::ontology::EventOntology;
use evext::pipeline::{self, DataFormat, GeneratorConfig, Pipeline, PseudoLabelRecord, RunConfig, TaggerConfig};
use evext::splits::{build_split, SplitMode};
use evext::synth::{self, SynthConfig};
use evext::tapkey::{ClassVector, ContextEmbedder, ContextEmbedderConfig, TapKeyModel, TriggerPrediction};
use evext::template::{parse_filled, GenerationInstance};

#[derive(Parser)]
#[command(name = "evext", version, about = "Event trigger and argument extraction")]
struct Cli {
    /// Directory searched for saved models that are not found at the given path.
    #[arg(long, env = "EVEXT_CACHE_DIR", global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a released dataset into document JSONL.
    Convert {
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        input: PathBuf,
        /// Coreference file (WikiEvents only).
        #[arg(long)]
        coref: Option<PathBuf>,
        #[command(flatten)]
        onto: OntologyArg,
        #[arg(long)]
        output: PathBuf,
    },
    /// Counts and trigger-argument distance statistics.
    Stats {
        #[arg(long, required = true, num_args = 1..)]
        docs: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        bin_width: usize,
    },
    /// Keep only some event types in a training set.
    BuildSplits {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long, value_parser = parse_split)]
        mode: SplitMode,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit (or load) the embedder and build keyword class vectors.
    BuildClassVectors {
        /// Documents whose text is searched for keywords.
        #[arg(long)]
        docs: PathBuf,
        /// Embedder file; fitted on `--docs` and written here if missing.
        #[arg(long)]
        embedder: PathBuf,
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[command(flatten)]
        onto: OntologyArg,
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        output: PathBuf,
    },
    /// Tag training sentences from class-vector similarity.
    PseudoLabel {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        embedder: PathBuf,
        #[arg(long)]
        class_vectors: PathBuf,
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the trigger tagger.
    TrainTrigger {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        embedder: PathBuf,
        #[arg(long)]
        class_vectors: PathBuf,
        #[arg(long)]
        pseudo_labels: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
        /// Defaults to `<cache-dir>/tagger.json`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Predict triggers; types with a class vector but no training data are added first.
    PredictTrigger {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        embedder: PathBuf,
        #[arg(long)]
        tagger: PathBuf,
        #[arg(long)]
        class_vectors: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the argument generator.
    TrainArgs {
        #[arg(long)]
        docs: PathBuf,
        /// Documents whose words the generator must be able to copy.
        #[arg(long)]
        unlabeled: Vec<PathBuf>,
        #[command(flatten)]
        onto: OntologyArg,
        #[command(flatten)]
        settings: Settings,
        /// Defaults to `<cache-dir>/generator`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Extract arguments for gold triggers, or for a trigger predictions file.
    ExtractArgs {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        triggers: Option<PathBuf>,
        #[command(flatten)]
        onto: OntologyArg,
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score trigger and/or argument predictions against gold documents.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        triggers: Option<PathBuf>,
        #[arg(long)]
        arguments: Option<PathBuf>,
        /// Report span and head F1 (the RAMS settings) instead of head/coref/informative.
        #[arg(long)]
        span: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run every stage from a config file, resuming where a previous run stopped.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        gold_triggers: bool,
        /// `key.path=value` overrides applied after the file.
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Write a synthetic corpus in the WikiEvents layout.
    Synth {
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 30)]
        train_docs: usize,
        #[arg(long, default_value_t = 10)]
        test_docs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to these event types.
        #[arg(long)]
        types: Vec<String>,
        /// Also write the built-in ontology as JSON.
        #[arg(long)]
        ontology: bool,
    },
    /// Show how a generated sequence aligns with an event's template.
    Align {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        doc_id: String,
        #[arg(long)]
        event_id: String,
        /// Generated text, tokens separated by spaces.
        #[arg(long)]
        generated: String,
        #[command(flatten)]
        onto: OntologyArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Wikievents,
    Rams,
}

#[derive(Args)]
struct OntologyArg {
    /// Ontology JSON; the built-in synthetic ontology when omitted.
    #[arg(long)]
    ontology: Option<PathBuf>,
}

impl OntologyArg {
    fn load(&self) -> Result<EventOntology> {
        Ok(match &self.ontology {
            Some(p) => evext::ontology::load_ontology(p)?,
            None => synth::ontology(),
        })
    }
}

/// Component settings for the single-stage commands, read from the same
/// sections a pipeline config uses.
#[derive(Args)]
struct Settings {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set")]
    overrides: Vec<String>,
}

impl Settings {
    fn value(&self) -> Result<Value> {
        let mut v = match &self.config {
            Some(p) => pipeline::read_config_value(p)?,
            None => Value::Object(Default::default()),
        };
        for o in &self.overrides {
            pipeline::apply_override(&mut v, o)?;
        }
        Ok(v)
    }

    fn section<T: DeserializeOwned + Default>(&self, key: &str) -> Result<T> {
        match self.value()?.get(key) {
            Some(v) => serde_json::from_value(v.clone()).with_context(|| format!("bad `{key}` section")),
            None => Ok(T::default()),
        }
    }

    fn seed(&self) -> Result<u64> {
        Ok(self.value()?.get("seed").and_then(Value::as_u64).unwrap_or(0))
    }

    fn view(&self) -> Result<ArgumentView> {
        Ok(match self.value()?.get("view") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => ArgumentView::Nearest,
        })
    }
}

fn parse_split(s: &str) -> Result<SplitMode, String> {
    s.parse().map_err(|e: evext::Error| e.to_string())
}

fn resolve_model(path: &Path, cache: Option<&Path>) -> PathBuf {
    if !path.exists() {
        if let Some(c) = cache {
            let candidate = c.join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn output_or_cache(output: Option<PathBuf>, cache: Option<&Path>, name: &str) -> Result<PathBuf> {
    match (output, cache) {
        (Some(p), _) => Ok(p),
        (None, Some(c)) => {
            std::fs::create_dir_all(c).with_context(|| format!("creating {}", c.display()))?;
            Ok(c.join(name))
        }
        (None, None) => bail!("give --output or set EVEXT_CACHE_DIR"),
    }
}

fn docs(path: &Path) -> Result<Vec<Document>> {
    read_documents(path).with_context(|| format!("reading documents from {}", path.display()))
}

fn print_reports(reports: &[ScoreReport], json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(reports)?);
    } else {
        print!("{}", render_table(reports));
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cache = cli.cache_dir.as_deref();
    match cli.command {
        Command::Convert { format, input, coref, onto, output } => {
            let ont = onto.load()?;
            let fmt = match format {
                Format::Wikievents => DataFormat::Wikievents,
                Format::Rams => DataFormat::Rams,
            };
            let d = pipeline::load_documents(fmt, &input, coref.as_deref(), Some(&ont))?;
            write_documents(&output, &d)?;
            eprintln!("wrote {} documents to {}", d.len(), output.display());
        }
        Command::Stats { docs: paths, bin_width } => {
            for p in paths {
                let d = docs(&p)?;
                let events: usize = d.iter().map(|x| x.event_mentions.len()).sum();
                let args: usize = d.iter().flat_map(|x| &x.event_mentions).map(|e| e.arguments.len()).sum();
                println!("{}: {} documents, {} events, {} arguments", p.display(), d.len(), events, args);
                for view in [ArgumentView::Nearest, ArgumentView::Informative] {
                    let s = distance_stats(&d, view, bin_width);
                    println!("  {view:?}: mean distance {:.2} words over {} arguments", s.mean_distance, s.num_arguments);
                    if view == ArgumentView::Nearest {
                        println!(
                            "  informative mention in the trigger sentence: {:.1}% of {} arguments",
                            100.0 * s.same_sentence_informative_fraction,
                            s.same_sentence_arguments
                        );
                    }
                }
            }
        }
        Command::BuildSplits { docs: path, mode, output } => {
            let (split, kept) = build_split(&docs(&path)?, mode);
            write_documents(&output, &split)?;
            println!("{}", kept.join("\n"));
        }
        Command::BuildClassVectors { docs: path, embedder, keywords, onto, settings, output } => {
            let d = docs(&path)?;
            let embedder_path = resolve_model(&embedder, cache);
            let emb = if embedder_path.exists() {
                ContextEmbedder::load(&embedder_path)?
            } else {
                let mut cfg: ContextEmbedderConfig = settings.section("embedder")?;
                cfg.seed = settings.seed()?;
                let e = pipeline::fit_embedder(&d, cfg);
                e.save(&embedder)?;
                e
            };
            let kws = pipeline::keyword_lists(keywords.as_deref(), &onto.load()?)?;
            let cvs = pipeline::class_vectors(&emb, &kws, &evext::corpus::corpus_sentences(&d));
            jsonl::write(&output, &cvs)?;
            for cv in &cvs {
                eprintln!("{}: {} occurrences", cv.event_type, cv.support_count);
            }
        }
        Command::PseudoLabel { docs: path, embedder, class_vectors, settings, output } => {
            let emb = ContextEmbedder::load(&resolve_model(&embedder, cache))?;
            let cvs: Vec<ClassVector> = jsonl::read(&class_vectors)?;
            let t: TaggerConfig = settings.section("tagger")?;
            let recs = pipeline::pseudo_label_docs(&emb, &cvs, &docs(&path)?, t.tau_i, t.tau_o);
            jsonl::write(&output, &recs)?;
            eprintln!("{} sentences pseudo-labelled", recs.len());
        }
        Command::TrainTrigger { docs: path, embedder, class_vectors, pseudo_labels, settings, output } => {
            let emb = ContextEmbedder::load(&resolve_model(&embedder, cache))?;
            let cvs: Vec<ClassVector> = jsonl::read(&class_vectors)?;
            let pseudo: Vec<PseudoLabelRecord> = match pseudo_labels {
                Some(p) => jsonl::read(&p)?,
                None => Vec::new(),
            };
            let mut t: TaggerConfig = settings.section("tagger")?;
            t.seed = settings.seed()?.wrapping_add(1);
            let (model, report) = pipeline::train_tagger(&emb, &cvs, &docs(&path)?, &pseudo, &t)?;
            let out = output_or_cache(output, cache, "tagger.json")?;
            model.save(&out)?;
            eprintln!("trained {} classes; final loss {:?}", report.classes.len(), report.gold.epoch_losses.last());
        }
        Command::PredictTrigger { docs: path, embedder, tagger, class_vectors, output } => {
            let emb = ContextEmbedder::load(&resolve_model(&embedder, cache))?;
            let mut model = TapKeyModel::load(&resolve_model(&tagger, cache))?;
            if let Some(p) = class_vectors {
                let cvs: Vec<ClassVector> = jsonl::read(&p)?;
                let added = pipeline::extend_classes(&mut model, &cvs)?;
                if !added.is_empty() {
                    eprintln!("added unseen types: {}", added.join(", "));
                }
            }
            let preds = pipeline::predict_all(&model, &emb, &docs(&path)?);
            jsonl::write(&output, &preds)?;
            eprintln!("{} triggers", preds.len());
        }
        Command::TrainArgs { docs: path, unlabeled, onto, settings, output } => {
            let ont = onto.load()?;
            let mut g: GeneratorConfig = settings.section("generator")?;
            let seed = settings.seed()?;
            g.model.seed = seed.wrapping_add(2);
            g.train.seed = seed.wrapping_add(3);
            if let Some(p) = &g.init_from {
                g.init_from = Some(resolve_model(p, cache));
            }
            let x: ExtractConfig = settings.section("extract")?;
            let mut extra = Vec::new();
            for p in &unlabeled {
                extra.extend(docs(p)?);
            }
            let (model, report) = pipeline::train_generator(&docs(&path)?, &extra, &ont, settings.view()?, &g, &x)?;
            let out = output_or_cache(output, cache, "generator")?;
            model.save(&out)?;
            eprintln!("saved generator to {}; final loss {:?}", out.display(), report.epoch_losses.last());
        }
        Command::ExtractArgs { docs: path, generator, triggers, onto, settings, output } => {
            let ont = onto.load()?;
            let model = CopyLm::load(&resolve_model(&generator, cache))?;
            let x: ExtractConfig = settings.section("extract")?;
            x.decode.validate()?;
            let d = docs(&path)?;
            let trig: Vec<TriggerPrediction> = match triggers {
                Some(p) => jsonl::read(&p)?,
                None => pipeline::gold_triggers(&d),
            };
            let events = if trig.is_empty() { Default::default() } else { pipeline::predicted_events(&trig) };
            let (args, summary) = pipeline::extract_all(&model, &d, &events, &ont, &x)?;
            jsonl::write(&output, &args)?;
            eprintln!("{} arguments from {} instances ({} unparseable)", args.len(), summary.instances, summary.unparseable);
        }
        Command::Score { gold, triggers, arguments, span, json } => {
            let g = docs(&gold)?;
            let trig: Option<Vec<TriggerPrediction>> = triggers.map(|p| jsonl::read(&p)).transpose()?;
            let mut reports = Vec::new();
            if let Some(t) = &trig {
                let (ti, tc) = score_triggers(t, &g)?;
                reports.extend([ti, tc]);
            }
            if let Some(p) = arguments {
                let args = jsonl::read(&p)?;
                let args = match &trig {
                    Some(t) => pipeline::align_args(&g, t, &args),
                    None => args,
                };
                if span {
                    let (s, h) = score_rams_span(&args, &g)?;
                    reports.extend([s, h]);
                } else {
                    reports.extend(score_all_arguments(&args, &g)?);
                }
            }
            if reports.is_empty() {
                bail!("nothing to score: give --triggers and/or --arguments");
            }
            print_reports(&reports, json)?;
        }
        Command::Pipeline { config, output_dir, seed, gold_triggers, overrides } => {
            let mut v = pipeline::read_config_value(&config)?;
            for o in &overrides {
                pipeline::apply_override(&mut v, o)?;
            }
            let mut cfg = RunConfig::from_value(v, config.parent())?;
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.gold_triggers |= gold_triggers;
            if let Some(p) = &cfg.generator.init_from {
                cfg.generator.init_from = Some(resolve_model(p, cache));
            }
            let summary = Pipeline::new(cfg)?.run()?;
            if !summary.stages_reused.is_empty() {
                eprintln!("reused: {}", summary.stages_reused.join(", "));
            }
            print_reports(&summary.reports, false)?;
        }
        Command::Synth { output_dir, train_docs, test_docs, seed, types, ontology } => {
            std::fs::create_dir_all(&output_dir)?;
            let base = SynthConfig { seed, event_types: types, ..Default::default() };
            let train = synth::corpus(&SynthConfig { num_docs: train_docs, doc_prefix: "train".into(), ..base.clone() });
            let test = synth::corpus(&SynthConfig { num_docs: test_docs, seed: seed.wrapping_add(1), doc_prefix: "test".into(), ..base });
            write_wikievents(&train, output_dir.join("train.jsonl"), output_dir.join("train_coref.jsonl"))?;
            write_wikievents(&test, output_dir.join("test.jsonl"), output_dir.join("test_coref.jsonl"))?;
            if ontology {
                std::fs::write(output_dir.join("ontology.json"), synth::ontology().to_json_string())?;
            }
            eprintln!("wrote {} train and {} test documents to {}", train.len(), test.len(), output_dir.display());
        }
        Command::Align { docs: path, doc_id, event_id, generated, onto } => {
            let ont = onto.load()?;
            let d = docs(&path)?;
            let doc = d.iter().find(|x| x.doc_id == doc_id).with_context(|| format!("no document {doc_id}"))?;
            let ev = doc.event(&event_id).with_context(|| format!("no event {event_id} in {doc_id}"))?;
            let inst = GenerationInstance::new(ont.template_for(&ev.event_type)?, doc, ev, usize::MAX)?;
            let gen: Vec<String> = generated.split_whitespace().map(str::to_string).collect();
            println!("template: {}", inst.blank_template.join(" "));
            match parse_filled(&inst, &gen) {
                Ok((fills, alignment)) => {
                    println!("{}", serde_json::to_string_pretty(&alignment)?);
                    println!("{}", serde_json::to_string_pretty(&fills)?);
                }
                Err(e) => println!("{e}"),
            }
        }
    }
    Ok(())
}
