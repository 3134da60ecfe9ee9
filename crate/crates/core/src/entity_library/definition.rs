//! Interpreting a definition paragraph as a set of synsets.

use std::collections::BTreeSet;

use crate::corpus::{AnnotatedDocument, GroupKind, Span, TagClass};
use crate::phrases::PhraseList;
use crate::taxonomy::{SynsetId, TaxonomyGraph};

pub const SEPARATORS: [&str; 3] = [".", ",", ";"];

const MAX_DEPTH: usize = 64;

/// Definition patterns separate the defined name from the definition; the
/// prefix list holds expressions stripped before a nominal group.
#[derive(Debug, Clone, Default)]
pub struct DefinitionRules {
    pub patterns: PhraseList,
    pub prefixes: PhraseList,
}

/// A word or a (possibly bracket-trimmed) syntactic group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chunk {
    Word(usize),
    Group { group: usize, segments: Vec<usize> },
}

impl Chunk {
    pub fn segments(&self) -> Vec<usize> {
        match self {
            Chunk::Word(i) => vec![*i],
            Chunk::Group { segments, .. } => segments.clone(),
        }
    }

    pub fn is_nominal(&self, doc: &AnnotatedDocument) -> bool {
        match self {
            Chunk::Word(i) => doc.segments[*i].class == TagClass::Nominal,
            Chunk::Group { group, .. } => {
                matches!(doc.groups[*group].kind, GroupKind::Nominal | GroupKind::Coordination)
            }
        }
    }

    pub fn lemma(&self, doc: &AnnotatedDocument) -> String {
        match self {
            Chunk::Word(i) => doc.segments[*i].lemma.clone(),
            Chunk::Group { group, segments } => doc.groups[*group].lemma.clone().unwrap_or_else(|| {
                segments.iter().map(|&i| doc.segments[i].lemma.as_str()).collect::<Vec<_>>().join(" ")
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reading {
    /// Document index of the first segment of the matched definition pattern.
    pub pattern_at: usize,
    pub chunks: Vec<Chunk>,
    pub synsets: BTreeSet<SynsetId>,
}

/// Synsets assigned to the definition in `span`; empty when no pattern matches.
pub fn read_definition(
    doc: &AnnotatedDocument,
    span: Span,
    graph: &TaxonomyGraph,
    rules: &DefinitionRules,
) -> BTreeSet<SynsetId> {
    interpret(doc, span, graph, rules).map(|r| r.synsets).unwrap_or_default()
}

pub fn interpret(
    doc: &AnnotatedDocument,
    span: Span,
    graph: &TaxonomyGraph,
    rules: &DefinitionRules,
) -> Option<Reading> {
    let kept = kept_segments(doc, span);
    let (pos, len) = rules.patterns.find_first(&doc.segments, &kept)?;
    let pattern_at = kept[pos];
    let definition = &kept[pos + len..];

    let mut chunks = Vec::new();
    let mut synsets = BTreeSet::new();
    for part in definition.split(|&i| SEPARATORS.contains(&doc.segments[i].surface.as_str())) {
        let part = &part[rules.prefixes.strip_leading(&doc.segments, part)..];
        if part.is_empty() {
            continue;
        }
        let chunk = first_group_or_word(doc, &kept, part);
        if !chunk.is_nominal(doc) {
            break;
        }
        synsets.extend(extract_synsets(doc, &chunk, graph));
        chunks.push(chunk);
    }
    Some(Reading {
        pattern_at,
        chunks,
        synsets,
    })
}

/// Segment indices of `span` outside brackets and quotations.
pub fn kept_segments(doc: &AnnotatedDocument, span: Span) -> Vec<usize> {
    let mut kept = Vec::with_capacity(span.len());
    let mut depth = 0usize;
    let mut closer: Option<&str> = None;
    for i in span.range() {
        let s = doc.segments[i].surface.as_str();
        if let Some(c) = closer {
            if s == c {
                closer = None;
            }
            continue;
        }
        match s {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth = depth.saturating_sub(1),
            "\"" | "'" if depth == 0 => closer = Some(s),
            "„" | "“" if depth == 0 => closer = Some("”"),
            "«" if depth == 0 => closer = Some("»"),
            "”" | "»" => {}
            _ if depth == 0 => kept.push(i),
            _ => {}
        }
    }
    kept
}

fn restrict(kept: &[usize], span: Span) -> Vec<usize> {
    let lo = kept.partition_point(|&i| i < span.start);
    let hi = kept.partition_point(|&i| i < span.end);
    kept[lo..hi].to_vec()
}

/// The longest group starting at the first segment of `part` and not leaving
/// it, or the first word.
fn first_group_or_word(doc: &AnnotatedDocument, kept: &[usize], part: &[usize]) -> Chunk {
    let first = part[0];
    let last = *part.last().expect("part is non-empty");
    let mut best: Option<(usize, Vec<usize>)> = None;
    for (g, group) in doc.groups.iter().enumerate() {
        if !group.span.contains(first) {
            continue;
        }
        let segs = restrict(kept, group.span);
        if segs.first() != Some(&first) || segs.last().is_some_and(|&l| l > last) {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| segs.len() > b.len()) {
            best = Some((g, segs));
        }
    }
    match best {
        Some((group, segments)) => Chunk::Group { group, segments },
        None => Chunk::Word(first),
    }
}

fn lookup<'g>(graph: &'g TaxonomyGraph, lemma: &str) -> Option<&'g SynsetId> {
    graph
        .first_sense_synset(lemma)
        .or_else(|| graph.first_sense_synset(&lemma.to_lowercase()))
        .map(|s| &s.id)
}

/// Whole-lemma lookup, then coordination elements, then the semantic head.
pub fn extract_synsets(doc: &AnnotatedDocument, chunk: &Chunk, graph: &TaxonomyGraph) -> BTreeSet<SynsetId> {
    extract_at_depth(doc, chunk, graph, 0)
}

fn extract_at_depth(doc: &AnnotatedDocument, chunk: &Chunk, graph: &TaxonomyGraph, depth: usize) -> BTreeSet<SynsetId> {
    if let Some(id) = lookup(graph, &chunk.lemma(doc)) {
        return BTreeSet::from([id.clone()]);
    }
    let Chunk::Group { group, segments } = chunk else {
        return BTreeSet::new();
    };
    if depth >= MAX_DEPTH {
        return BTreeSet::new();
    }
    let g = &doc.groups[*group];
    match g.kind {
        GroupKind::Coordination => coordination_elements(doc, *group, segments)
            .iter()
            .flat_map(|e| extract_at_depth(doc, e, graph, depth + 1))
            .collect(),
        _ => {
            let head_segs: Vec<usize> = segments.iter().copied().filter(|&i| g.head.contains(i)).collect();
            if head_segs.is_empty() {
                return BTreeSet::new();
            }
            let sub = doc
                .groups
                .iter()
                .enumerate()
                .find(|&(k, h)| k != *group && h.span == g.head)
                .map(|(k, h)| Chunk::Group {
                    group: k,
                    segments: head_segs.iter().copied().filter(|&i| h.span.contains(i)).collect(),
                });
            match sub {
                Some(c) => extract_at_depth(doc, &c, graph, depth + 1),
                None if head_segs.len() == 1 => extract_at_depth(doc, &Chunk::Word(head_segs[0]), graph, depth + 1),
                None => BTreeSet::new(),
            }
        }
    }
}

/// Maximal sub-groups inside the coordination plus the words they leave uncovered.
fn coordination_elements(doc: &AnnotatedDocument, group: usize, segments: &[usize]) -> Vec<Chunk> {
    let outer = doc.groups[group].span;
    let mut children: Vec<(usize, Vec<usize>)> = Vec::new();
    for (k, g) in doc.groups.iter().enumerate() {
        if k == group || !outer.covers(&g.span) || g.span == outer {
            continue;
        }
        let segs: Vec<usize> = segments.iter().copied().filter(|&i| g.span.contains(i)).collect();
        if segs.is_empty() {
            continue;
        }
        let inside_other = doc.groups.iter().enumerate().any(|(j, h)| {
            j != group && j != k && h.span != outer && outer.covers(&h.span) && h.span.covers(&g.span) && h.span != g.span
        });
        if !inside_other {
            children.push((k, segs));
        }
    }
    let mut out: Vec<(usize, Chunk)> = Vec::new();
    for &i in segments {
        if !children.iter().any(|(_, segs)| segs.contains(&i)) {
            out.push((i, Chunk::Word(i)));
        }
    }
    for (k, segs) in children {
        out.push((segs[0], Chunk::Group { group: k, segments: segs }));
    }
    out.sort_by_key(|(first, _)| *first);
    out.into_iter().map(|(_, c)| c).collect()
}
