//! Finding library entities in annotated documents.

mod trie;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{render, AnnotatedDocument, Span};
use crate::entity_library::{EntityId, EntityLibrary};
use crate::question::{GeneralType, QuestionModel};
use crate::taxonomy::TaxonomyGraph;
pub use trie::{name_matches, EntityTrie};

pub const DEFAULT_WINDOW_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ChunkSource {
    GroupLemma,
    SurfaceSequence,
    BaseFormSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    #[serde(rename = "deepER")]
    DeepEr,
    Ner,
    Quant,
}

impl MentionKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deeper" => Some(MentionKind::DeepEr),
            "ner" => Some(MentionKind::Ner),
            "quant" => Some(MentionKind::Quant),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MentionKind::DeepEr => "deepER",
            MentionKind::Ner => "ner",
            MentionKind::Quant => "quant",
        }
    }
}

/// An occurrence of an answer candidate. DeepER mentions carry an entity;
/// NER and Quant mentions carry the label that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityMention {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<EntityId>,
    pub doc_id: String,
    pub span: Span,
    pub matched_name: String,
    /// Surface text of the span.
    pub text: String,
    pub capitalized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunk_source: Option<ChunkSource>,
    pub kind: MentionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub provenance: BTreeSet<MentionKind>,
}

impl EntityMention {
    pub fn new(doc: &AnnotatedDocument, span: Span, kind: MentionKind) -> Self {
        EntityMention {
            entity_id: None,
            doc_id: doc.doc_id.clone(),
            span,
            matched_name: String::new(),
            text: doc.text(span),
            capitalized: doc.segments[span.start].cap,
            chunk_source: None,
            kind,
            label: None,
            value: None,
            provenance: BTreeSet::from([kind]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub text: String,
    pub span: Span,
    pub source: ChunkSource,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error("question model has no focus synset for entity filtering")]
    NoFocus,
    #[error("unknown synset in compatibility test: {0}")]
    UnknownSynset(String),
}

pub fn build_trie(lib: &EntityLibrary) -> EntityTrie {
    let mut t = EntityTrie::new();
    for (name, ids) in lib.name_index() {
        for &id in ids {
            t.insert(name, id);
        }
    }
    t
}

fn is_boundary_noise(doc: &AnnotatedDocument, i: usize) -> bool {
    let s = &doc.segments[i];
    s.is_punctuation() || s.is_paragraph_marker()
}

/// Word and group lemmas, then every surface and base-form sequence of up to
/// `window_cap` segments. Sequences never include a paragraph marker and never
/// start or end with punctuation. Duplicates by (text, span) keep their first
/// source.
pub fn candidate_chunks(doc: &AnnotatedDocument, window_cap: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut seen: HashSet<(String, Span)> = HashSet::new();
    let mut push = |out: &mut Vec<Candidate>, text: String, span: Span, source: ChunkSource| {
        if !text.is_empty() && seen.insert((text.clone(), span)) {
            out.push(Candidate { text, span, source });
        }
    };
    for (i, s) in doc.segments.iter().enumerate() {
        if !is_boundary_noise(doc, i) {
            push(&mut out, s.lemma.clone(), Span::new(i, i + 1), ChunkSource::GroupLemma);
        }
    }
    for g in &doc.groups {
        let lemma = g.lemma.clone().unwrap_or_else(|| {
            render(doc.segments[g.span.range()].iter().map(|s| s.lemma.as_str()))
        });
        push(&mut out, lemma, g.span, ChunkSource::GroupLemma);
    }
    let n = doc.segments.len();
    for source in [ChunkSource::SurfaceSequence, ChunkSource::BaseFormSequence] {
        for start in 0..n {
            if is_boundary_noise(doc, start) {
                continue;
            }
            for end in start + 1..=(start + window_cap).min(n) {
                if doc.segments[end - 1].is_paragraph_marker() {
                    break;
                }
                if is_boundary_noise(doc, end - 1) {
                    continue;
                }
                let segs = &doc.segments[start..end];
                let text = match source {
                    ChunkSource::SurfaceSequence => render(segs.iter().map(|s| s.surface.as_str())),
                    _ => render(segs.iter().map(|s| s.lemma.as_str())),
                };
                push(&mut out, text, Span::new(start, end), source);
            }
        }
    }
    out
}

fn sort_and_dedup(mentions: Vec<EntityMention>) -> Vec<EntityMention> {
    let mut seen = HashSet::new();
    let mut out: Vec<EntityMention> = mentions
        .into_iter()
        .filter(|m| seen.insert((m.entity_id, m.span)))
        .collect();
    out.sort_by_key(|m| (m.span.start, m.span.end, m.entity_id));
    out
}

fn mention(doc: &AnnotatedDocument, c: &Candidate, name: &str, id: EntityId) -> EntityMention {
    let mut m = EntityMention::new(doc, c.span, MentionKind::DeepEr);
    m.entity_id = Some(id);
    m.matched_name = name.to_string();
    m.chunk_source = Some(c.source);
    m
}

/// Every (entity, span) whose name fuzzily matches some candidate chunk.
pub fn scan_document(doc: &AnnotatedDocument, trie: &EntityTrie, window_cap: usize) -> Vec<EntityMention> {
    let mut found = Vec::new();
    for c in candidate_chunks(doc, window_cap) {
        for (name, ids) in trie.fuzzy_lookup(&c.text) {
            for &id in ids {
                found.push(mention(doc, &c, &name, id));
            }
        }
    }
    sort_and_dedup(found)
}

/// Reference implementation testing every candidate against every name.
pub fn scan_document_naive(doc: &AnnotatedDocument, lib: &EntityLibrary, window_cap: usize) -> Vec<EntityMention> {
    let mut found = Vec::new();
    for c in candidate_chunks(doc, window_cap) {
        for (name, ids) in lib.name_index() {
            if name_matches(&c.text, name) {
                for &id in ids {
                    found.push(mention(doc, &c, name, id));
                }
            }
        }
    }
    sort_and_dedup(found)
}

/// Keeps DeepER mentions agreeing with the question's general type and whose
/// entity carries a synset at or below the focus synset. Other mention kinds
/// pass through.
pub fn filter_compatible(
    mentions: Vec<EntityMention>,
    model: &QuestionModel,
    graph: &TaxonomyGraph,
    lib: &EntityLibrary,
) -> Result<Vec<EntityMention>, MatchError> {
    let mut out = Vec::with_capacity(mentions.len());
    for m in mentions {
        if m.kind != MentionKind::DeepEr {
            out.push(m);
            continue;
        }
        let focus = model.focus_synset.as_ref().ok_or(MatchError::NoFocus)?;
        if model.general_type == GeneralType::NamedEntity && !m.capitalized {
            continue;
        }
        let Some(entity) = m.entity_id.and_then(|id| lib.entity(id)) else {
            continue;
        };
        let mut keep = false;
        for s in &entity.synset_ids {
            if graph
                .is_hypernym_or_equal(focus, s)
                .map_err(|_| MatchError::UnknownSynset(s.to_string()))?
            {
                keep = true;
                break;
            }
        }
        if keep {
            out.push(m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::{doc, seg};
    use crate::corpus::TagClass;

    fn words(ws: &[&str]) -> AnnotatedDocument {
        doc("d", ws.iter().map(|w| seg(w, TagClass::Nominal, 0)).collect())
    }

    #[test]
    fn single_segment_candidates_collapse() {
        let mut d = words(&["Kennedy"]);
        d.segments[0].lemma = "Kennedy".into();
        let c = candidate_chunks(&d, 8);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].source, ChunkSource::GroupLemma);
    }

    #[test]
    fn sequence_count_with_window_cap() {
        let mut d = words(&["a1", "b2", "c3", "d4", "e5"]);
        for s in &mut d.segments {
            s.lemma = s.surface.to_uppercase();
        }
        let c = candidate_chunks(&d, 4);
        let surface = c.iter().filter(|c| c.source == ChunkSource::SurfaceSequence).count();
        let base = c.iter().filter(|c| c.source == ChunkSource::BaseFormSequence).count();
        // lengths 1..=4 over 5 segments; single base forms duplicate word lemmas
        assert_eq!(surface, 5 + 4 + 3 + 2);
        assert_eq!(base, 4 + 3 + 2);
    }

    #[test]
    fn punctuation_and_paragraph_bounds() {
        let d = words(&["A", ",", "B", "¶", "C"]);
        let mut d = d;
        d.segments[3].tag = "PARA".into();
        let texts: Vec<String> = candidate_chunks(&d, 8)
            .into_iter()
            .filter(|c| c.source == ChunkSource::SurfaceSequence)
            .map(|c| c.text)
            .collect();
        assert_eq!(texts, vec!["A", "A, B", "B", "C"]);
    }
}
