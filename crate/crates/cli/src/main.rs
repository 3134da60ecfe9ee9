mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deeper::answering::{AnswerOutcome, Pipeline};
use deeper::entity_library::{corpus_digest, EntityLibrary};
use deeper::entity_matcher::build_trie;
use deeper::evalkit::{evaluate, load_gold, run_sweep, CorrectionsMode, EvalReport, SweepSpec, SWEEP_HEADER};
use deeper::resources::Resources;
use deeper::retrieval::{Index, Layer};
use deeper::tagger::{parse_source, LexiconTagger};
use serde::Serialize;

use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "deeper", version, about = "Factoid question answering with deep entity recognition")]
struct Cli {
    /// Pipeline configuration file
    #[arg(long, global = true, default_value = config::DEFAULT_CONFIG)]
    config: PathBuf,
    /// Worker threads; 0 uses the available parallelism
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the entity library from the corpus and taxonomy
    BuildLibrary {
        /// Output file [default: outputs.library from the config]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the retrieval index over the corpus
    BuildIndex {
        /// Output file [default: outputs.index from the config]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer one question and print the answer record
    Answer {
        question: String,
        /// Question id written to the record
        #[arg(long, default_value = "q")]
        id: String,
        /// Index layer used for retrieval [default: retrieval.layer from the config, base]
        #[arg(long)]
        layer: Option<Layer>,
        #[command(flatten)]
        overrides: AnswerOverrides,
    },
    /// Evaluate a gold question set and write report files
    Eval {
        /// Gold set, one JSON record per line
        #[arg(long)]
        gold: PathBuf,
        /// Directory for report.json and verdicts.csv
        #[arg(long, default_value = "eval-report")]
        out_dir: PathBuf,
        /// Add each question's expected document and use its gold type
        #[arg(long)]
        corrections: bool,
        /// Bootstrap resamples [default: eval.bootstrap-iterations from the config, 10000]
        #[arg(long)]
        iterations: Option<usize>,
        /// Bootstrap seed [default: eval.seed from the config, 20130901]
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        overrides: AnswerOverrides,
    },
    /// Evaluate over a parameter grid: documents, confidence or context
    Sweep {
        name: String,
        #[arg(long)]
        gold: PathBuf,
        /// Output table [default: sweep-<name>.csv]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add each question's expected document and use its gold type
        #[arg(long)]
        corrections: bool,
        #[command(flatten)]
        overrides: AnswerOverrides,
    },
    /// Look up library entities by name
    InspectEntity {
        name: String,
        /// Also list entities whose names match fuzzily
        #[arg(long)]
        fuzzy: bool,
    },
    /// Annotate a plain-text corpus source with the lexicon tagger
    Annotate {
        /// Source file with `=== id | kind | title` records
        #[arg(long)]
        source: PathBuf,
        /// Tagger lexicon [default: resources.lexicon from the config]
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Output corpus file [default: standard output]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct AnswerOverrides {
    /// Documents retrieved per question [config default: 20]
    #[arg(long)]
    documents: Option<usize>,
    /// Minimal confidence of a returned answer [config default: 0]
    #[arg(long)]
    min_confidence: Option<f64>,
    /// Context strategy, sentence or window [config default: sentence]
    #[arg(long)]
    context: Option<String>,
    /// Window length as a multiple of the question content size [config default: 1.5]
    #[arg(long)]
    window_ratio: Option<f64>,
    /// Add the document title to every context [config default: true]
    #[arg(long)]
    title: Option<bool>,
    /// Comma-separated mention sources: deepER, ner, quant [config default: deepER]
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<String>>,
    /// Longest segment sequence tried as an entity name [config default: 8]
    #[arg(long)]
    window_cap: Option<usize>,
    /// Candidates printed per answer record [config default: 5]
    #[arg(long)]
    top_k: Option<usize>,
}

impl AnswerOverrides {
    fn apply(self, cfg: &mut PipelineConfig) {
        let a = &mut cfg.answer;
        if let Some(v) = self.documents {
            a.documents = v;
        }
        if let Some(v) = self.min_confidence {
            a.min_confidence = v;
        }
        if let Some(v) = self.context {
            a.context = v;
        }
        if let Some(v) = self.window_ratio {
            a.window_ratio = v;
        }
        if let Some(v) = self.title {
            a.title = v;
        }
        if let Some(v) = self.sources {
            a.sources = v;
        }
        if let Some(v) = self.window_cap {
            a.window_cap = v;
        }
        if let Some(v) = self.top_k {
            a.top_k = v;
        }
    }
}

enum Failure {
    /// Invalid input, configuration or missing prerequisites.
    Usage(String),
    NothingAnswered,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // Only fails when a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NothingAnswered) => {
            eprintln!("deeper: no question was answered");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("deeper: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Command::Annotate { source, lexicon, out } = cli.command {
        let lexicon = match lexicon {
            Some(l) => l,
            None => PipelineConfig::load(&cli.config)?.resources.lexicon,
        };
        return annotate(&source, &lexicon, out.as_deref());
    }
    let mut cfg = PipelineConfig::load(&cli.config)?;
    match cli.command {
        Command::BuildLibrary { out } => {
            cfg.validate()?;
            build_library_cmd(&cfg, out.unwrap_or(cfg.outputs.library.clone()))
        }
        Command::BuildIndex { out } => {
            cfg.validate()?;
            let res = Resources::load(&cfg.resources)?;
            let index = res.build_index();
            let out = out.unwrap_or(cfg.outputs.index.clone());
            create_parent(&out)?;
            index.save(&out)?;
            println!("indexed {} documents into {}", index.doc_count(), out.display());
            Ok(())
        }
        Command::Answer {
            question,
            id,
            layer,
            overrides,
        } => {
            overrides.apply(&mut cfg);
            if let Some(l) = layer {
                cfg.retrieval.layer = match l {
                    Layer::Surface => "surface".into(),
                    Layer::Base => "base".into(),
                };
            }
            cfg.validate()?;
            let pipeline = load_pipeline(&cfg)?;
            let outcome = pipeline.answer(&question, &cfg.answer_config()?)?;
            let record = AnswerRecord::new(&id, &outcome, cfg.answer.top_k);
            println!("{}", serde_json::to_string_pretty(&record)?);
            Ok(())
        }
        Command::Eval {
            gold,
            out_dir,
            corrections,
            iterations,
            seed,
            overrides,
        } => {
            overrides.apply(&mut cfg);
            if let Some(i) = iterations {
                cfg.eval.bootstrap_iterations = i;
            }
            if let Some(s) = seed {
                cfg.eval.seed = s;
            }
            cfg.validate()?;
            let gold = load_gold(&gold)?;
            let pipeline = load_pipeline(&cfg)?;
            let results = evaluate(&pipeline, &gold, &cfg.answer_config()?, corrections_mode(corrections))?;
            let report = EvalReport::new(results, Some((cfg.eval.bootstrap_iterations, cfg.eval.seed)))?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            std::fs::write(out_dir.join("verdicts.csv"), report.verdicts_csv())?;
            print!("{}", report.table());
            if report.metrics.answered == 0 {
                return Err(Failure::NothingAnswered);
            }
            Ok(())
        }
        Command::Sweep {
            name,
            gold,
            out,
            corrections,
            overrides,
        } => {
            overrides.apply(&mut cfg);
            cfg.validate()?;
            let spec = SweepSpec::by_name(&name)?;
            let gold = load_gold(&gold)?;
            let pipeline = load_pipeline(&cfg)?;
            let rows = run_sweep(&pipeline, &gold, &cfg.answer_config()?, &spec, corrections_mode(corrections))?;
            let mut table = String::from(SWEEP_HEADER);
            table.push('\n');
            for r in &rows {
                table += &r.csv();
                table.push('\n');
            }
            let out = out.unwrap_or_else(|| PathBuf::from(format!("sweep-{name}.csv")));
            create_parent(&out)?;
            std::fs::write(&out, &table)?;
            print!("{table}");
            if rows.iter().all(|r| r.metrics.answered == 0) {
                return Err(Failure::NothingAnswered);
            }
            Ok(())
        }
        Command::InspectEntity { name, fuzzy } => {
            let lib = load_library(&cfg.outputs.library)?;
            let mut ids: Vec<u32> = lib.lookup(&name).to_vec();
            if fuzzy {
                ids.extend(build_trie(&lib).fuzzy_lookup(&name).into_iter().flat_map(|(_, ids)| ids));
                ids.sort_unstable();
                ids.dedup();
            }
            if ids.is_empty() {
                return Err(Failure::Usage(format!("no entity named {name:?}")));
            }
            for id in ids {
                println!("{}", serde_json::to_string_pretty(&lib.entity(id))?);
            }
            Ok(())
        }
        Command::Annotate { .. } => unreachable!("handled above"),
    }
}

fn corrections_mode(on: bool) -> CorrectionsMode {
    if on {
        CorrectionsMode::FULL
    } else {
        CorrectionsMode::default()
    }
}

fn create_parent(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p),
        _ => Ok(()),
    }
}

fn build_library_cmd(cfg: &PipelineConfig, out: PathBuf) -> Outcome {
    let res = Resources::load(&cfg.resources)?;
    let (lib, report) = res.build_library();
    create_parent(&out)?;
    lib.save(&out)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "entities   {}", report.entities);
    let _ = writeln!(summary, "aliases    {}", report.aliases);
    let _ = writeln!(summary, "names      {}", report.names);
    let _ = writeln!(summary, "articles   {} ({} without a definition pattern)", report.articles, report.articles_without_pattern);
    let _ = writeln!(
        summary,
        "disambiguation items {} ({} matched, {} new)",
        report.disambiguation_items, report.items_matched, report.items_created
    );
    let _ = writeln!(summary, "redirects  {} ({} unresolved)", report.redirects, report.missing_redirect_targets.len());
    print!("{summary}");
    eprintln!("library written to {}", out.display());
    Ok(())
}

fn load_library(path: &Path) -> Result<EntityLibrary, Failure> {
    if !path.exists() {
        return Err(Failure::Usage(format!("{}: library not built (run build-library)", path.display())));
    }
    EntityLibrary::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_pipeline(cfg: &PipelineConfig) -> Result<Pipeline, Failure> {
    let lib = load_library(&cfg.outputs.library)?;
    let index_path = &cfg.outputs.index;
    if !index_path.exists() {
        return Err(Failure::Usage(format!("{}: index not built (run build-index)", index_path.display())));
    }
    let index = Index::load(index_path).map_err(|e| Failure::Usage(format!("{}: {e}", index_path.display())))?;
    let mut res = Resources::load(&cfg.resources)?;
    let digest = corpus_digest(&res.docs);
    if index.corpus_digest != digest {
        return Err(Failure::Usage(format!("{}: index was built from a different corpus", index_path.display())));
    }
    if lib.corpus_digest != digest {
        return Err(Failure::Usage(format!(
            "{}: library was built from a different corpus",
            cfg.outputs.library.display()
        )));
    }
    if lib.taxonomy_digest != res.graph.digest() {
        return Err(Failure::Usage(format!(
            "{}: library was built from a different taxonomy",
            cfg.outputs.library.display()
        )));
    }
    res.analyzer.matching = cfg.matching();
    res.analyzer.layer = cfg.layer()?;
    Ok(res.into_pipeline(lib, index))
}

fn annotate(source: &Path, lexicon: &Path, out: Option<&Path>) -> Outcome {
    let tagger = LexiconTagger::from_path(lexicon).map_err(|e| format!("{}: {e}", lexicon.display()))?;
    let text = std::fs::read_to_string(source).map_err(|e| format!("{}: {e}", source.display()))?;
    let records = parse_source(&text).map_err(|e| format!("{}: {e}", source.display()))?;
    let mut jsonl = String::new();
    for d in tagger.annotate_source(&records) {
        d.validate()?;
        jsonl += &d.to_json_line();
        jsonl.push('\n');
    }
    match out {
        Some(p) => {
            create_parent(p)?;
            std::fs::write(p, jsonl)?
        }
        None => print!("{jsonl}"),
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CandidateRecord<'a> {
    answer: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    entity_name: Option<&'a str>,
    doc_id: &'a str,
    score: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AnswerRecord<'a> {
    question_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entity_name: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    supporting_sentence: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    doc_id: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refusal: Option<&'a str>,
    candidates: Vec<CandidateRecord<'a>>,
}

impl<'a> AnswerRecord<'a> {
    fn new(id: &'a str, o: &'a AnswerOutcome, top_k: usize) -> Self {
        let a = o.answer.as_ref();
        AnswerRecord {
            question_id: id,
            answer: a.map(|a| a.answer.as_str()),
            entity_name: a.and_then(|a| a.entity_name.as_deref()),
            supporting_sentence: a.map(|a| a.supporting_sentence.as_str()),
            doc_id: a.map(|a| a.doc_id.as_str()),
            confidence: a.map(|a| a.confidence),
            refusal: o.refusal.as_ref().map(|r| r.kind()),
            candidates: o
                .ranked
                .iter()
                .take(top_k)
                .map(|c| CandidateRecord {
                    answer: &c.answer,
                    entity_name: c.entity_name.as_deref(),
                    doc_id: &c.doc_id,
                    score: c.score,
                })
                .collect(),
        }
    }
}
