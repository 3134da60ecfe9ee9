//! Question analysis: pattern classification, focus analysis, the search
//! query and the question content.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{render_with_offsets, AnnotatedDocument, GroupKind, Span, TagClass};
use crate::phrases::PhraseList;
use crate::retrieval::{Layer, Matching, SearchQuery};
use crate::taxonomy::{SynsetId, TaxonomyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GeneralType {
    Verification,
    Option,
    NamedEntity,
    UnnamedEntity,
    OtherName,
    Multiple,
}

impl GeneralType {
    pub const ALL: [GeneralType; 6] = [
        GeneralType::Verification,
        GeneralType::Option,
        GeneralType::NamedEntity,
        GeneralType::UnnamedEntity,
        GeneralType::OtherName,
        GeneralType::Multiple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneralType::Verification => "VERIFICATION",
            GeneralType::Option => "OPTION",
            GeneralType::NamedEntity => "NAMED_ENTITY",
            GeneralType::UnnamedEntity => "UNNAMED_ENTITY",
            GeneralType::OtherName => "OTHER_NAME",
            GeneralType::Multiple => "MULTIPLE",
        }
    }

    pub fn is_entity(self) -> bool {
        matches!(self, GeneralType::NamedEntity | GeneralType::UnnamedEntity)
    }
}

impl fmt::Display for GeneralType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneralType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        GeneralType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown general type {s:?}"))
    }
}

macro_rules! ne_types {
    ($($v:ident => $n:literal),* $(,)?) => {
        /// Named-entity types a question may ask for.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "SCREAMING_SNAKE_CASE")]
        pub enum NeType { $($v),* }

        impl NeType {
            pub const ALL: &'static [NeType] = &[$(NeType::$v),*];

            pub fn name(self) -> &'static str {
                match self { $(NeType::$v => $n),* }
            }
        }
    };
}

ne_types! {
    Place => "PLACE",
    Continent => "CONTINENT",
    River => "RIVER",
    Lake => "LAKE",
    Mountain => "MOUNTAIN",
    Range => "RANGE",
    Island => "ISLAND",
    Archipelago => "ARCHIPELAGO",
    Sea => "SEA",
    CelestialBody => "CELESTIAL_BODY",
    Country => "COUNTRY",
    State => "STATE",
    City => "CITY",
    Nationality => "NATIONALITY",
    Person => "PERSON",
    Name => "NAME",
    Surname => "SURNAME",
    Band => "BAND",
    Dynasty => "DYNASTY",
    Organisation => "ORGANISATION",
    Company => "COMPANY",
    Event => "EVENT",
    Time => "TIME",
    Century => "CENTURY",
    Year => "YEAR",
    Period => "PERIOD",
    Count => "COUNT",
    Quantity => "QUANTITY",
    Vehicle => "VEHICLE",
    Animal => "ANIMAL",
    Title => "TITLE",
}

impl NeType {
    /// Types whose answers are compared as numbers.
    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            NeType::Time | NeType::Century | NeType::Year | NeType::Period | NeType::Count | NeType::Quantity
        )
    }
}

impl fmt::Display for NeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NeType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().replace([' ', '-'], "_");
        NeType::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(&norm))
            .ok_or_else(|| format!("unknown named-entity type {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum QuestionError {
    #[error("{file} line {line}: {message}")]
    Config { file: &'static str, line: usize, message: String },
    #[error("query is empty after removing pattern words")]
    EmptyQuery,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a matching pattern assigns. `Focus` marks an ambiguous pronoun whose
/// type is decided by focus analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternTarget {
    Type(GeneralType, Option<NeType>),
    Focus,
}

#[derive(Debug, Clone)]
pub struct ClassificationPattern {
    pub regex: Regex,
    pub target: PatternTarget,
}

pub fn parse_patterns(text: &str) -> Result<Vec<ClassificationPattern>, QuestionError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| QuestionError::Config {
            file: "pattern file",
            line: n + 1,
            message,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&f.len()) {
            return Err(err("expected regex<TAB>generalType[<TAB>neType]".into()));
        }
        let regex = Regex::new(f[0]).map_err(|e| err(e.to_string()))?;
        let target = if f[1] == "FOCUS" {
            if f.len() == 3 {
                return Err(err("FOCUS patterns take no named-entity type".into()));
            }
            PatternTarget::Focus
        } else {
            let g: GeneralType = f[1].parse().map_err(err)?;
            let ne = f.get(2).map(|s| s.parse::<NeType>()).transpose().map_err(err)?;
            if ne.is_some() && g != GeneralType::NamedEntity {
                return Err(err("a named-entity type requires NAMED_ENTITY".into()));
            }
            PatternTarget::Type(g, ne)
        };
        out.push(ClassificationPattern { regex, target });
    }
    Ok(out)
}

/// `synsetId<TAB>neType` lines, in priority order.
pub fn parse_synset_ne_table(text: &str) -> Result<Vec<(SynsetId, NeType)>, QuestionError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| QuestionError::Config {
            file: "synset table",
            line: n + 1,
            message,
        };
        let (id, ne) = line.split_once('\t').ok_or_else(|| err("expected synsetId<TAB>neType".into()))?;
        out.push((SynsetId::from(id.trim()), ne.parse().map_err(err)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub pattern: usize,
    pub target: PatternTarget,
    /// Segments consumed by the pattern, ascending.
    pub consumed: Vec<usize>,
}

/// First pattern in file order matching the rendered question. Consumed
/// segments are those overlapping a capture group, or the whole match when
/// the pattern has no groups.
pub fn classify(question: &AnnotatedDocument, patterns: &[ClassificationPattern]) -> Option<Classification> {
    let (text, offsets) = render_with_offsets(question.segments.iter().map(|s| s.surface.as_str()));
    for (pi, p) in patterns.iter().enumerate() {
        let Some(caps) = p.regex.captures(&text) else { continue };
        let groups: Vec<(usize, usize)> = caps.iter().skip(1).flatten().map(|m| (m.start(), m.end())).collect();
        let ranges = if groups.is_empty() {
            let m = caps.get(0).expect("group 0 always participates");
            vec![(m.start(), m.end())]
        } else {
            groups
        };
        let consumed = offsets
            .iter()
            .enumerate()
            .filter(|(_, &(s, e))| ranges.iter().any(|&(a, b)| s < b && a < e))
            .map(|(i, _)| i)
            .collect();
        return Some(Classification {
            pattern: pi,
            target: p.target,
            consumed,
        });
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocusAnalysis {
    pub general_type: GeneralType,
    pub ne_type: Option<NeType>,
    pub focus_synset: Option<SynsetId>,
    pub focus_span: Option<Span>,
    /// Set when no usable focus was found.
    pub fallback: bool,
}

fn lookup<'g>(graph: &'g TaxonomyGraph, lemma: &str) -> Option<&'g SynsetId> {
    graph
        .first_sense_synset(lemma)
        .or_else(|| graph.first_sense_synset(&lemma.to_lowercase()))
        .map(|s| &s.id)
}

/// Nearest synset (itself first, then ancestors breadth-first) listed in the table.
pub fn ne_type_for_synset(graph: &TaxonomyGraph, table: &[(SynsetId, NeType)], s: &SynsetId) -> Option<NeType> {
    let find = |id: &SynsetId| table.iter().find(|(t, _)| t == id).map(|(_, ne)| *ne);
    find(s).or_else(|| graph.ancestors_nearest_first(s).ok()?.into_iter().find_map(find))
}

/// Looks up the nominal group starting at `start` (after opening
/// constructions), falling back to semantic heads until a lexeme is found.
pub fn analyse_focus(
    question: &AnnotatedDocument,
    start: usize,
    graph: &TaxonomyGraph,
    openings: &PhraseList,
    synset_ne: &[(SynsetId, NeType)],
) -> FocusAnalysis {
    let fallback = FocusAnalysis {
        general_type: GeneralType::UnnamedEntity,
        ne_type: None,
        focus_synset: None,
        focus_span: None,
        fallback: true,
    };
    let idx: Vec<usize> = (start.min(question.len())..question.len()).collect();
    let skip = openings.strip_leading(&question.segments, &idx);
    let Some(&pos) = idx.get(skip) else {
        return fallback;
    };
    let group = question
        .groups
        .iter()
        .filter(|g| g.span.start == pos && matches!(g.kind, GroupKind::Nominal | GroupKind::Coordination))
        .max_by_key(|g| g.span.len());
    let mut span = match group {
        Some(g) => g.span,
        None if question.segments[pos].class == TagClass::Nominal => Span::new(pos, pos + 1),
        None => return fallback,
    };
    let mut guard = 0;
    let synset = loop {
        let lemma = match question.groups.iter().find(|g| g.span == span) {
            Some(g) if span.len() > 1 => g.lemma.clone().unwrap_or_else(|| question.text(span)),
            _ if span.len() == 1 => question.segments[span.start].lemma.clone(),
            _ => question.text(span),
        };
        if let Some(s) = lookup(graph, &lemma) {
            break s.clone();
        }
        let head = question.groups.iter().find(|g| g.span == span).map(|g| g.head);
        match head {
            Some(h) if h != span && guard < 64 => {
                span = h;
                guard += 1;
            }
            _ => return fallback,
        }
    };
    let ne_type = ne_type_for_synset(graph, synset_ne, &synset);
    FocusAnalysis {
        general_type: if ne_type.is_some() {
            GeneralType::NamedEntity
        } else {
            GeneralType::UnnamedEntity
        },
        ne_type,
        focus_synset: Some(synset),
        focus_span: Some(span),
        fallback: false,
    }
}

fn is_word(question: &AnnotatedDocument, i: usize) -> bool {
    let s = &question.segments[i];
    !s.is_punctuation() && !s.is_paragraph_marker()
}

/// OR-query over the base forms left after removing pattern words.
pub fn generate_query(
    question: &AnnotatedDocument,
    consumed: &[usize],
    matching: Matching,
    layer: Layer,
) -> Result<SearchQuery, QuestionError> {
    let mut seen = HashSet::new();
    let terms: Vec<String> = (0..question.len())
        .filter(|i| !consumed.contains(i) && is_word(question, *i))
        .map(|i| match layer {
            Layer::Base => question.segments[i].lemma.to_lowercase(),
            Layer::Surface => question.segments[i].surface.to_lowercase(),
        })
        .filter(|t| seen.insert(t.clone()))
        .collect();
    if terms.is_empty() {
        return Err(QuestionError::EmptyQuery);
    }
    Ok(SearchQuery { terms, matching, layer })
}

/// Base forms of the words outside the pattern match and the focus lexeme.
pub fn question_content(question: &AnnotatedDocument, consumed: &[usize], focus: Option<Span>) -> Vec<String> {
    let mut seen = HashSet::new();
    (0..question.len())
        .filter(|&i| !consumed.contains(&i) && !focus.is_some_and(|f| f.contains(i)) && is_word(question, i))
        .map(|i| question.segments[i].lemma.to_lowercase())
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuestionModel {
    pub general_type: GeneralType,
    pub ne_type: Option<NeType>,
    pub focus_synset: Option<SynsetId>,
    pub query: Option<SearchQuery>,
    pub content: Vec<String>,
    pub consumed: Vec<usize>,
    pub focus_span: Option<Span>,
    pub pattern: Option<usize>,
    pub focus_fallback: bool,
}

impl QuestionModel {
    /// A model with a fixed type and no analysis, used to override types.
    pub fn with_type(&self, general_type: GeneralType, ne_type: Option<NeType>) -> QuestionModel {
        QuestionModel {
            general_type,
            ne_type,
            ..self.clone()
        }
    }
}

/// Everything needed to turn an annotated question into a [`QuestionModel`].
#[derive(Debug, Clone)]
pub struct QuestionAnalyzer {
    pub patterns: Vec<ClassificationPattern>,
    pub openings: PhraseList,
    pub synset_ne: Vec<(SynsetId, NeType)>,
    pub matching: Matching,
    pub layer: Layer,
}

impl QuestionAnalyzer {
    pub fn load(patterns: &Path, openings: &Path, synset_ne: &Path) -> Result<Self, QuestionError> {
        Ok(QuestionAnalyzer {
            patterns: parse_patterns(&std::fs::read_to_string(patterns)?)?,
            openings: PhraseList::from_path(openings)?,
            synset_ne: parse_synset_ne_table(&std::fs::read_to_string(synset_ne)?)?,
            matching: Matching::default(),
            layer: Layer::Base,
        })
    }

    pub fn analyse(&self, question: &AnnotatedDocument, graph: &TaxonomyGraph) -> QuestionModel {
        let class = classify(question, &self.patterns);
        let consumed = class.as_ref().map(|c| c.consumed.clone()).unwrap_or_default();
        let mut model = QuestionModel {
            general_type: GeneralType::UnnamedEntity,
            ne_type: None,
            focus_synset: None,
            query: None,
            content: Vec::new(),
            consumed: consumed.clone(),
            focus_span: None,
            pattern: class.as_ref().map(|c| c.pattern),
            focus_fallback: false,
        };
        match class.map(|c| c.target) {
            Some(PatternTarget::Type(g, ne)) => {
                model.general_type = g;
                model.ne_type = ne;
                if let Some(ne) = ne {
                    model.focus_synset = self.synset_ne.iter().find(|(_, t)| *t == ne).map(|(s, _)| s.clone());
                }
            }
            target => {
                let start = match target {
                    Some(_) => consumed.last().map_or(0, |&i| i + 1),
                    None => 0,
                };
                let f = analyse_focus(question, start, graph, &self.openings, &self.synset_ne);
                model.general_type = f.general_type;
                model.ne_type = f.ne_type;
                model.focus_synset = f.focus_synset;
                model.focus_span = f.focus_span;
                model.focus_fallback = f.fallback;
            }
        }
        model.query = generate_query(question, &consumed, self.matching, self.layer).ok();
        model.content = question_content(question, &consumed, model.focus_span);
        model
    }
}
