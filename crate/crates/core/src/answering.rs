//! The per-question pipeline: analysis, retrieval, mention recognition,
//! context scoring and answer selection.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedDocument, Span};
use crate::entity_library::EntityLibrary;
use crate::entity_matcher::{build_trie, EntityMention, EntityTrie, MentionKind, DEFAULT_WINDOW_CAP};
use crate::ner_adapter::{hybrid_mentions, MentionSources, NeTypeMapping, NerError, NumeralLexicon};
use crate::question::{GeneralType, NeType, QuestionAnalyzer, QuestionModel};
use crate::retrieval::{Index, IndexError};
use crate::tagger::LexiconTagger;
use crate::taxonomy::{SynsetId, TaxonomyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ContextStrategy {
    Sentence,
    Window { ratio: f64 },
}

impl ContextStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            ContextStrategy::Sentence => "sentence",
            ContextStrategy::Window { .. } => "window",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Context {
    pub base_forms: BTreeSet<String>,
    pub strategy: ContextStrategy,
    pub title_included: bool,
    pub source_span: Span,
}

/// Window length for a question content of `content_len` words.
pub fn window_length(ratio: f64, content_len: usize) -> usize {
    ((ratio * content_len as f64).round() as usize).max(1)
}

fn is_word(doc: &AnnotatedDocument, i: usize) -> bool {
    let s = &doc.segments[i];
    !s.is_punctuation() && !s.is_paragraph_marker()
}

/// Contexts of a mention: its sentence(s), or every window of `M` words
/// containing it, each optionally extended by the title's base forms.
pub fn generate_contexts(
    mention: Span,
    doc: &AnnotatedDocument,
    strategy: ContextStrategy,
    include_title: bool,
    content_len: usize,
) -> Vec<Context> {
    let make = |span: Span, words: &mut dyn Iterator<Item = String>| {
        let mut base_forms: BTreeSet<String> = words.collect();
        if include_title {
            base_forms.extend(doc.title_base_forms());
        }
        Context {
            base_forms,
            strategy,
            title_included: include_title,
            source_span: span,
        }
    };
    match strategy {
        ContextStrategy::Sentence => {
            let first = doc.sentence_span(mention.start).expect("mention within document");
            let last = doc.sentence_span(mention.end - 1).expect("mention within document");
            let span = Span::new(first.start, last.end);
            vec![make(span, &mut doc.base_forms(span))]
        }
        ContextStrategy::Window { ratio } => {
            let m = window_length(ratio, content_len);
            let words: Vec<usize> = (0..doc.len()).filter(|&i| is_word(doc, i)).collect();
            let inside: Vec<usize> = (0..words.len()).filter(|&k| mention.contains(words[k])).collect();
            let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
                return generate_contexts(mention, doc, ContextStrategy::Sentence, include_title, content_len);
            };
            let starts: Vec<usize> = if last - first + 1 >= m || words.len() <= m {
                vec![if words.len() <= m { 0 } else { first }]
            } else {
                ((last + 1).saturating_sub(m)..=first.min(words.len() - m)).collect()
            };
            starts
                .into_iter()
                .map(|s| {
                    let e = if words.len() <= m {
                        words.len()
                    } else if last - first + 1 >= m {
                        last + 1
                    } else {
                        s + m
                    };
                    let span = Span::new(words[s], words[e - 1] + 1);
                    let mut it = words[s..e].iter().map(|&i| doc.segments[i].lemma.to_lowercase());
                    make(span, &mut it)
                })
                .collect()
        }
    }
}

/// Weighted Jaccard: weight of the intersection over weight of the union.
pub fn similarity(a: &BTreeSet<String>, b: &BTreeSet<String>, weight: impl Fn(&str) -> f64) -> f64 {
    let inter = a.intersection(b).fold(0.0, |s, t| s + weight(t));
    let union = a.union(b).fold(0.0, |s, t| s + weight(t));
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerConfig {
    pub document_count: usize,
    pub min_confidence: f64,
    pub context: ContextStrategy,
    pub include_title: bool,
    pub sources: BTreeSet<MentionKind>,
    pub window_cap: usize,
}

impl Default for AnswerConfig {
    fn default() -> Self {
        AnswerConfig {
            document_count: 20,
            min_confidence: 0.0,
            context: ContextStrategy::Sentence,
            include_title: true,
            sources: BTreeSet::from([MentionKind::DeepEr]),
            window_cap: DEFAULT_WINDOW_CAP,
        }
    }
}

/// Gold metadata injected in corrections mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corrections {
    pub expected_doc: Option<String>,
    pub question_type: Option<(GeneralType, Option<NeType>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub answer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_name: Option<String>,
    pub doc_id: String,
    pub doc_rank: usize,
    pub span: Span,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub mention: EntityMention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Answer {
    pub answer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_name: Option<String>,
    pub supporting_sentence: String,
    pub doc_id: String,
    pub confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Refusal {
    UnsupportedQuestionType { general_type: GeneralType },
    EmptyQuery,
    NoCandidates,
    LowConfidence { best: f64 },
}

impl Refusal {
    pub fn kind(&self) -> &'static str {
        match self {
            Refusal::UnsupportedQuestionType { .. } => "unsupported-question-type",
            Refusal::EmptyQuery => "empty-query",
            Refusal::NoCandidates => "no-candidates",
            Refusal::LowConfidence { .. } => "low-confidence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerOutcome {
    pub model: QuestionModel,
    pub retrieved: Vec<(String, f64)>,
    pub answer: Option<Answer>,
    pub refusal: Option<Refusal>,
    pub ranked: Vec<Candidate>,
}

#[derive(Debug, Error)]
pub enum AnswerError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Ner(#[from] NerError),
}

/// Immutable resources shared by all questions.
pub struct Pipeline {
    pub graph: TaxonomyGraph,
    pub lib: EntityLibrary,
    pub trie: EntityTrie,
    pub index: Index,
    pub docs: Vec<AnnotatedDocument>,
    by_id: HashMap<String, usize>,
    pub analyzer: QuestionAnalyzer,
    pub mapping: NeTypeMapping,
    pub numerals: NumeralLexicon,
    pub unit_synset: Option<SynsetId>,
    pub tagger: LexiconTagger,
}

pub struct PipelineParts {
    pub graph: TaxonomyGraph,
    pub lib: EntityLibrary,
    pub index: Index,
    pub docs: Vec<AnnotatedDocument>,
    pub analyzer: QuestionAnalyzer,
    pub mapping: NeTypeMapping,
    pub numerals: NumeralLexicon,
    pub unit_synset: Option<SynsetId>,
    pub tagger: LexiconTagger,
}

impl Pipeline {
    pub fn new(p: PipelineParts) -> Self {
        let by_id = p.docs.iter().enumerate().map(|(i, d)| (d.doc_id.clone(), i)).collect();
        Pipeline {
            trie: build_trie(&p.lib),
            graph: p.graph,
            lib: p.lib,
            index: p.index,
            docs: p.docs,
            by_id,
            analyzer: p.analyzer,
            mapping: p.mapping,
            numerals: p.numerals,
            unit_synset: p.unit_synset,
            tagger: p.tagger,
        }
    }

    pub fn doc(&self, id: &str) -> Option<&AnnotatedDocument> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn analyse(&self, question: &str) -> QuestionModel {
        let q = self.tagger.annotate_snippet("question", question);
        self.analyzer.analyse(&q, &self.graph)
    }

    pub fn answer(&self, question: &str, config: &AnswerConfig) -> Result<AnswerOutcome, AnswerError> {
        self.answer_with(question, config, &Corrections::default())
    }

    pub fn answer_with(
        &self,
        question: &str,
        config: &AnswerConfig,
        corrections: &Corrections,
    ) -> Result<AnswerOutcome, AnswerError> {
        let mut model = self.analyse(question);
        if let Some((g, ne)) = corrections.question_type {
            if (g, ne) != (model.general_type, model.ne_type) {
                model = model.with_type(g, ne);
                if let Some(ne) = ne {
                    model.focus_synset = self
                        .analyzer
                        .synset_ne
                        .iter()
                        .find(|(_, t)| *t == ne)
                        .map(|(s, _)| s.clone())
                        .or(model.focus_synset);
                }
            }
        }
        let mut outcome = AnswerOutcome {
            model,
            retrieved: Vec::new(),
            answer: None,
            refusal: None,
            ranked: Vec::new(),
        };
        if !outcome.model.general_type.is_entity() {
            outcome.refusal = Some(Refusal::UnsupportedQuestionType {
                general_type: outcome.model.general_type,
            });
            return Ok(outcome);
        }
        let Some(query) = &outcome.model.query else {
            outcome.refusal = Some(Refusal::EmptyQuery);
            return Ok(outcome);
        };
        outcome.retrieved = self.index.search(query, config.document_count.max(1))?;
        if let Some(expected) = &corrections.expected_doc {
            if !outcome.retrieved.iter().any(|(d, _)| d == expected) {
                outcome.retrieved.push((expected.clone(), 0.0));
            }
        }
        outcome.ranked = self.rank(&outcome.model, &outcome.retrieved, config)?;
        match outcome.ranked.first() {
            None => outcome.refusal = Some(Refusal::NoCandidates),
            Some(best) if best.score < config.min_confidence => {
                outcome.refusal = Some(Refusal::LowConfidence { best: best.score })
            }
            Some(best) => {
                let doc = self.doc(&best.doc_id).expect("ranked documents exist");
                let sentence = doc.sentence_span(best.span.start).expect("mention within document");
                outcome.answer = Some(Answer {
                    answer: best.answer.clone(),
                    entity_name: best.entity_name.clone(),
                    supporting_sentence: doc.text(sentence),
                    doc_id: best.doc_id.clone(),
                    confidence: best.score,
                    value: best.value,
                });
            }
        }
        Ok(outcome)
    }

    /// Every compatible mention in the retrieved documents scored by its best
    /// context, best first.
    pub fn rank(
        &self,
        model: &QuestionModel,
        retrieved: &[(String, f64)],
        config: &AnswerConfig,
    ) -> Result<Vec<Candidate>, AnswerError> {
        let sources = MentionSources {
            graph: &self.graph,
            lib: &self.lib,
            trie: &self.trie,
            mapping: &self.mapping,
            numerals: &self.numerals,
            unit_synset: self.unit_synset.as_ref(),
            window_cap: config.window_cap,
        };
        let content: BTreeSet<String> = model.content.iter().cloned().collect();
        let weight = |t: &str| self.index.idf_weight(t).unwrap_or(1.0);
        let per_doc: Vec<Result<Vec<Candidate>, AnswerError>> = retrieved
            .par_iter()
            .enumerate()
            .map(|(rank, (doc_id, _))| {
                let Some(doc) = self.doc(doc_id) else { return Ok(Vec::new()) };
                let mentions = hybrid_mentions(doc, model, &config.sources, &sources)?;
                Ok(mentions
                    .into_iter()
                    .map(|m| {
                        let score = generate_contexts(m.span, doc, config.context, config.include_title, content.len())
                            .iter()
                            .map(|c| similarity(&content, &c.base_forms, weight))
                            .fold(0.0, f64::max);
                        Candidate {
                            answer: m.text.clone(),
                            entity_name: m.entity_id.and_then(|id| self.lib.entity(id)).map(|e| e.main_name.clone()),
                            doc_id: doc_id.clone(),
                            doc_rank: rank,
                            span: m.span,
                            score,
                            value: m.value,
                            mention: m,
                        }
                    })
                    .collect())
            })
            .collect();
        let mut all = Vec::new();
        for r in per_doc {
            all.extend(r?);
        }
        all.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.doc_rank.cmp(&b.doc_rank))
                .then(a.span.cmp(&b.span))
                .then(a.mention.entity_id.cmp(&b.mention.entity_id))
                .then(a.mention.kind.cmp(&b.mention.kind))
        });
        Ok(all)
    }
}
