//! The TOML pipeline configuration. Relative paths are resolved against the
//! directory of the configuration file; command-line flags override values
//! read from it.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use deeper::answering::{AnswerConfig, ContextStrategy};
use deeper::entity_matcher::{MentionKind, DEFAULT_WINDOW_CAP};
use deeper::evalkit::DEFAULT_WINDOW_RATIO;
use deeper::resources::ResourcePaths;
use deeper::retrieval::{Layer, Matching};
use serde::Deserialize;

pub const DEFAULT_CONFIG: &str = "deeper.toml";
pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_130_901;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PipelineConfig {
    pub resources: ResourcePaths,
    pub outputs: Outputs,
    #[serde(default)]
    pub answer: AnswerSection,
    #[serde(default)]
    pub retrieval: RetrievalSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Outputs {
    pub library: PathBuf,
    pub index: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct AnswerSection {
    pub documents: usize,
    pub min_confidence: f64,
    pub context: String,
    pub window_ratio: f64,
    pub title: bool,
    pub sources: Vec<String>,
    pub window_cap: usize,
    pub top_k: usize,
}

impl Default for AnswerSection {
    fn default() -> Self {
        let d = AnswerConfig::default();
        AnswerSection {
            documents: d.document_count,
            min_confidence: d.min_confidence,
            context: d.context.label().to_string(),
            window_ratio: DEFAULT_WINDOW_RATIO,
            title: d.include_title,
            sources: d.sources.iter().map(|s| s.name().to_string()).collect(),
            window_cap: DEFAULT_WINDOW_CAP,
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RetrievalSection {
    pub fuzzy: bool,
    pub max_distance: usize,
    pub prefix_length: usize,
    pub layer: String,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        let Matching::Fuzzy {
            max_distance,
            prefix_length,
        } = Matching::default()
        else {
            unreachable!("fuzzy matching is the default")
        };
        RetrievalSection {
            fuzzy: true,
            max_distance,
            prefix_length,
            layer: "base".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EvalSection {
    pub bootstrap_iterations: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            bootstrap_iterations: DEFAULT_ITERATIONS,
            seed: DEFAULT_SEED,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resources.resolve(base);
        for p in [&mut cfg.outputs.library, &mut cfg.outputs.index] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.resources.check_exist().map_err(|e| e.to_string())?;
        self.answer_config()?;
        self.layer()?;
        if self.eval.bootstrap_iterations == 0 {
            return Err("eval.bootstrap-iterations must be at least 1".into());
        }
        Ok(())
    }

    pub fn answer_config(&self) -> Result<AnswerConfig, String> {
        let a = &self.answer;
        if a.documents == 0 {
            return Err("answer.documents must be at least 1".into());
        }
        if !(a.min_confidence.is_finite() && a.min_confidence >= 0.0) {
            return Err("answer.min-confidence must be a non-negative number".into());
        }
        if a.window_cap == 0 {
            return Err("answer.window-cap must be at least 1".into());
        }
        let context = match a.context.as_str() {
            "sentence" => ContextStrategy::Sentence,
            "window" if a.window_ratio.is_finite() && a.window_ratio > 0.0 => ContextStrategy::Window { ratio: a.window_ratio },
            "window" => return Err("answer.window-ratio must be positive".into()),
            other => return Err(format!("unknown context strategy {other:?} (expected sentence or window)")),
        };
        let sources = a
            .sources
            .iter()
            .map(|s| MentionKind::parse(s).ok_or_else(|| format!("unknown mention source {s:?} (expected deepER, ner or quant)")))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if sources.is_empty() {
            return Err("answer.sources must name at least one source".into());
        }
        Ok(AnswerConfig {
            document_count: a.documents,
            min_confidence: a.min_confidence,
            context,
            include_title: a.title,
            sources,
            window_cap: a.window_cap,
        })
    }

    pub fn matching(&self) -> Matching {
        let r = &self.retrieval;
        if r.fuzzy {
            Matching::Fuzzy {
                max_distance: r.max_distance,
                prefix_length: r.prefix_length,
            }
        } else {
            Matching::Exact
        }
    }

    pub fn layer(&self) -> Result<Layer, String> {
        self.retrieval.layer.parse()
    }
}
