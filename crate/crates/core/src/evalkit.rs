//! Automatic answer evaluation, accuracy metrics, bootstrap error bars and
//! parameter sweeps.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answering::{AnswerConfig, AnswerError, AnswerOutcome, ContextStrategy, Corrections, Pipeline};
use crate::entity_library::EntityLibrary;
use crate::entity_matcher::{scan_document, EntityTrie};
use crate::ner_adapter::{parse_number, NumeralLexicon};
use crate::question::{GeneralType, NeType};
use crate::tagger::LexiconTagger;

pub const DOCUMENT_GRID: [usize; 6] = [1, 5, 10, 20, 50, 100];
pub const DEFAULT_WINDOW_RATIO: f64 = 1.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold set line {line}: {message}")]
    Gold { line: usize, message: String },
    #[error("gold set is empty")]
    EmptyGold,
    #[error("no results to resample")]
    EmptyResults,
    #[error("unknown sweep {0:?} (expected one of: documents, confidence, context)")]
    UnknownSweep(String),
    #[error(transparent)]
    Answer(#[from] AnswerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GoldQuestion {
    pub id: String,
    pub text: String,
    pub expected_answer: String,
    pub general_type: GeneralType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne_type: Option<NeType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_doc_id: Option<String>,
}

pub fn parse_gold(text: &str) -> Result<Vec<GoldQuestion>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let g: GoldQuestion = serde_json::from_str(line).map_err(|e| EvalError::Gold {
            line: n + 1,
            message: e.to_string(),
        })?;
        if g.expected_answer.trim().is_empty() {
            return Err(EvalError::Gold {
                line: n + 1,
                message: "expectedAnswer is empty".into(),
            });
        }
        if g.ne_type.is_some() && g.general_type != GeneralType::NamedEntity {
            return Err(EvalError::Gold {
                line: n + 1,
                message: "neType requires NAMED_ENTITY".into(),
            });
        }
        out.push(g);
    }
    if out.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(out)
}

pub fn load_gold(path: impl AsRef<Path>) -> Result<Vec<GoldQuestion>, EvalError> {
    parse_gold(&std::fs::read_to_string(path)?)
}

/// What automatic evaluation needs to recognise entities in answer strings.
pub struct Evaluator<'a> {
    pub tagger: &'a LexiconTagger,
    pub trie: &'a EntityTrie,
    pub lib: &'a EntityLibrary,
    pub numerals: &'a NumeralLexicon,
    pub window_cap: usize,
}

impl<'a> Evaluator<'a> {
    pub fn for_pipeline(p: &'a Pipeline, window_cap: usize) -> Self {
        Evaluator {
            tagger: &p.tagger,
            trie: &p.trie,
            lib: &p.lib,
            numerals: &p.numerals,
            window_cap,
        }
    }

    /// True iff the expected answer names an entity recognised in the answer
    /// (case-insensitively), or the two strings are equal.
    pub fn auto_evaluate(&self, answer: &str, expected: &str) -> bool {
        if answer == expected {
            return true;
        }
        let doc = self.tagger.annotate_snippet("answer", answer);
        if doc.is_empty() {
            return false;
        }
        let expected = expected.to_lowercase();
        scan_document(&doc, self.trie, self.window_cap)
            .iter()
            .filter_map(|m| m.entity_id.and_then(|id| self.lib.entity(id)))
            .any(|e| e.names().iter().any(|n| n.to_lowercase() == expected))
    }

    /// Numeric comparison of parsed values for numeric question types.
    pub fn numeric_equal(&self, answer: &str, answer_value: Option<f64>, expected: &str) -> bool {
        let parse = |s: &str| parse_number(&self.tagger.annotate_snippet("n", s), self.numerals);
        let a = answer_value.or_else(|| parse(answer));
        matches!((a, parse(expected)), (Some(a), Some(b)) if (a - b).abs() < 1e-9)
    }

    pub fn judge(&self, answer: &str, value: Option<f64>, gold: &GoldQuestion) -> bool {
        match gold.ne_type {
            Some(t) if t.is_numeric() => answer == gold.expected_answer || self.numeric_equal(answer, value, &gold.expected_answer),
            _ => self.auto_evaluate(answer, &gold.expected_answer),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub answered: bool,
    pub correct: bool,
    /// 1-based rank of the first correct distinct answer string.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub questions: usize,
    pub answered: usize,
    pub correct: usize,
    pub recall: f64,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub mrr: f64,
}

pub fn compute_metrics(results: &[Verdict]) -> Metrics {
    let total = results.len();
    let answered = results.iter().filter(|v| v.answered).count();
    let correct = results.iter().filter(|v| v.answered && v.correct).count();
    let recall = if total > 0 { answered as f64 / total as f64 } else { 0.0 };
    let precision = (answered > 0).then(|| correct as f64 / answered as f64);
    let f1 = precision.map(|p| if p + recall > 0.0 { 2.0 * p * recall / (p + recall) } else { 0.0 });
    let mrr = if total > 0 {
        results.iter().map(|v| v.rank.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / total as f64
    } else {
        0.0
    };
    Metrics {
        questions: total,
        answered,
        correct,
        recall,
        precision,
        f1,
        mrr,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sigma {
    pub recall: f64,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub mrr: f64,
}

fn std_dev(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some((xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Population standard deviation of each metric over `iterations` resamples
/// with replacement. Resample `i` draws from a generator seeded by `seed` and
/// `i`, so the result does not depend on thread scheduling.
pub fn bootstrap_sigma(results: &[Verdict], iterations: usize, seed: u64) -> Result<Sigma, EvalError> {
    if results.is_empty() || iterations == 0 {
        return Err(EvalError::EmptyResults);
    }
    let samples: Vec<Metrics> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample: Vec<Verdict> = (0..results.len())
                .map(|_| results[rng.random_range(0..results.len())])
                .collect();
            compute_metrics(&sample)
        })
        .collect();
    let col = |f: &dyn Fn(&Metrics) -> Option<f64>| -> Vec<f64> { samples.iter().filter_map(f).collect() };
    Ok(Sigma {
        recall: std_dev(&col(&|m| Some(m.recall))).unwrap_or(0.0),
        precision: std_dev(&col(&|m| m.precision)),
        f1: std_dev(&col(&|m| m.f1)),
        mrr: std_dev(&col(&|m| Some(m.mrr))).unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuestionResult {
    pub id: String,
    pub verdict: Verdict,
    pub answer: Option<String>,
    pub confidence: Option<f64>,
    pub refusal: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorrectionsMode {
    pub add_expected_doc: bool,
    pub override_type: bool,
}

impl CorrectionsMode {
    pub const FULL: CorrectionsMode = CorrectionsMode {
        add_expected_doc: true,
        override_type: true,
    };

    fn for_question(&self, g: &GoldQuestion) -> Corrections {
        Corrections {
            expected_doc: self.add_expected_doc.then(|| g.expected_doc_id.clone()).flatten(),
            question_type: self.override_type.then_some((g.general_type, g.ne_type)),
        }
    }
}

pub fn verdict_for(outcome: &AnswerOutcome, gold: &GoldQuestion, ev: &Evaluator) -> Verdict {
    let correct = outcome
        .answer
        .as_ref()
        .is_some_and(|a| ev.judge(&a.answer, a.value, gold));
    let mut seen = HashSet::new();
    let mut rank = None;
    for c in &outcome.ranked {
        if !seen.insert(c.answer.as_str()) {
            continue;
        }
        if ev.judge(&c.answer, c.value, gold) {
            rank = Some(seen.len());
            break;
        }
    }
    Verdict {
        answered: outcome.answer.is_some(),
        correct,
        rank,
    }
}

/// Answers and judges every gold question.
pub fn evaluate(
    pipeline: &Pipeline,
    gold: &[GoldQuestion],
    config: &AnswerConfig,
    corrections: CorrectionsMode,
) -> Result<Vec<QuestionResult>, EvalError> {
    let ev = Evaluator::for_pipeline(pipeline, config.window_cap);
    gold.iter()
        .map(|g| {
            let outcome = pipeline.answer_with(&g.text, config, &corrections.for_question(g))?;
            Ok(QuestionResult {
                id: g.id.clone(),
                verdict: verdict_for(&outcome, g, &ev),
                answer: outcome.answer.as_ref().map(|a| a.answer.clone()),
                confidence: outcome.answer.as_ref().map(|a| a.confidence),
                refusal: outcome.refusal.as_ref().map(|r| r.kind().to_string()),
            })
        })
        .collect()
}

/// Metrics, optional bootstrap deviations and per-question verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sigma>,
    pub questions: Vec<QuestionResult>,
}

impl EvalReport {
    /// `bootstrap` is `(iterations, seed)`.
    pub fn new(questions: Vec<QuestionResult>, bootstrap: Option<(usize, u64)>) -> Result<Self, EvalError> {
        let verdicts: Vec<Verdict> = questions.iter().map(|q| q.verdict).collect();
        let sigma = bootstrap
            .map(|(iterations, seed)| bootstrap_sigma(&verdicts, iterations, seed))
            .transpose()?;
        Ok(EvalReport {
            metrics: compute_metrics(&verdicts),
            sigma,
            questions,
        })
    }

    pub fn table(&self) -> String {
        let m = &self.metrics;
        let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let sd = |x: Option<f64>| x.map_or(String::new(), |v| format!(" ± {:.2}%", 100.0 * v));
        let s = self.sigma.as_ref();
        let mut out = format!("questions  {}\nanswered   {}\ncorrect    {}\n", m.questions, m.answered, m.correct);
        out += &format!("recall     {}{}\n", pct(Some(m.recall)), sd(s.map(|s| s.recall)));
        out += &format!("precision  {}{}\n", pct(m.precision), sd(s.and_then(|s| s.precision)));
        out += &format!("F1         {}{}\n", m.f1.map_or("n/a".into(), |f| format!("{f:.4}")), sd(s.and_then(|s| s.f1)));
        out += &format!("MRR        {:.4}{}\n", m.mrr, sd(s.map(|s| s.mrr)));
        out
    }

    pub fn verdicts_csv(&self) -> String {
        let mut out = String::from("id,answered,correct,rank,confidence,refusal,answer\n");
        for q in &self.questions {
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                q.id,
                q.verdict.answered,
                q.verdict.correct,
                q.verdict.rank.map_or(String::new(), |r| r.to_string()),
                q.confidence.map_or(String::new(), |c| format!("{c:.6}")),
                q.refusal.as_deref().unwrap_or(""),
                csv_field(q.answer.as_deref().unwrap_or("")),
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    Documents(Vec<usize>),
    Confidence(Vec<f64>),
    Context { window_ratio: f64 },
}

impl SweepSpec {
    pub const NAMES: [&'static str; 3] = ["documents", "confidence", "context"];

    pub fn by_name(name: &str) -> Result<Self, EvalError> {
        match name {
            "documents" => Ok(SweepSpec::Documents(DOCUMENT_GRID.to_vec())),
            "confidence" => Ok(SweepSpec::Confidence((0..=10).map(|i| i as f64 * 0.05).collect())),
            "context" => Ok(SweepSpec::Context {
                window_ratio: DEFAULT_WINDOW_RATIO,
            }),
            _ => Err(EvalError::UnknownSweep(name.to_string())),
        }
    }

    pub fn param(&self) -> &'static str {
        match self {
            SweepSpec::Documents(_) => "documents",
            SweepSpec::Confidence(_) => "confidence",
            SweepSpec::Context { .. } => "context",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub metrics: Metrics,
}

pub const SWEEP_HEADER: &str = "param,value,recall,precision,f1,mrr";

impl SweepRow {
    pub fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));
        format!(
            "{},{},{:.6},{},{},{:.6}",
            self.param,
            self.value,
            self.metrics.recall,
            opt(self.metrics.precision),
            opt(self.metrics.f1),
            self.metrics.mrr
        )
    }
}

/// One evaluation per setting, in parallel across settings.
pub fn run_sweep(
    pipeline: &Pipeline,
    gold: &[GoldQuestion],
    base: &AnswerConfig,
    spec: &SweepSpec,
    corrections: CorrectionsMode,
) -> Result<Vec<SweepRow>, EvalError> {
    let settings: Vec<(String, AnswerConfig)> = match spec {
        SweepSpec::Documents(grid) => grid
            .iter()
            .map(|&n| (n.to_string(), AnswerConfig { document_count: n, ..base.clone() }))
            .collect(),
        SweepSpec::Confidence(grid) => grid
            .iter()
            .map(|&c| (format!("{c:.2}"), AnswerConfig { min_confidence: c, ..base.clone() }))
            .collect(),
        SweepSpec::Context { window_ratio } => [
            (ContextStrategy::Sentence, false),
            (ContextStrategy::Sentence, true),
            (ContextStrategy::Window { ratio: *window_ratio }, false),
            (ContextStrategy::Window { ratio: *window_ratio }, true),
        ]
        .into_iter()
        .map(|(context, include_title)| {
            let label = format!("{}{}", context.label(), if include_title { "+title" } else { "" });
            (label, AnswerConfig { context, include_title, ..base.clone() })
        })
        .collect(),
    };
    settings
        .into_par_iter()
        .map(|(value, config)| {
            let results = evaluate(pipeline, gold, &config, corrections)?;
            let verdicts: Vec<Verdict> = results.iter().map(|r| r.verdict).collect();
            Ok(SweepRow {
                param: spec.param().to_string(),
                value,
                metrics: compute_metrics(&verdicts),
            })
        })
        .collect()
}
