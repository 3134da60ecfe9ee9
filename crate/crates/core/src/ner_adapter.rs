//! Named-entity and numeric mentions: external NE annotations mapped to
//! question types, the Quant number/quantity recognizer, and the merge of
//! all mention sources.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::corpus::{AnnotatedDocument, Segment, Span, TagClass};
use crate::entity_library::EntityLibrary;
use crate::entity_matcher::{filter_compatible, scan_document, EntityMention, EntityTrie, MentionKind};
use crate::question::{NeType, QuestionModel};
use crate::taxonomy::{SynsetId, TaxonomyGraph};

pub const QUANT_NUMBER: &str = "number";
pub const QUANT_QUANTITY: &str = "quantity";
const MAX_CHAIN: usize = 24;

#[derive(Debug, Error)]
pub enum NerError {
    #[error("{file} line {line}: {message}")]
    Parse { file: &'static str, line: usize, message: String },
    #[error("mapping has no row for {0}")]
    MissingType(NeType),
    #[error("no unit-of-measurement synset configured")]
    NoUnitSynset,
    #[error("unit-of-measurement synset {0} is not in the taxonomy")]
    UnknownUnitSynset(SynsetId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Question NE type → external labels. A label ending in `*` matches by prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeTypeMapping {
    rows: BTreeMap<NeType, Vec<String>>,
}

impl NeTypeMapping {
    /// `question_type<TAB>label{,label}`; every type must have a row, which may
    /// have an empty label list.
    pub fn parse(text: &str) -> Result<Self, NerError> {
        let mut rows = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| NerError::Parse {
                file: "mapping",
                line: n + 1,
                message,
            };
            let (ty, labels) = line.split_once('\t').unwrap_or((line, ""));
            let ty: NeType = ty.parse().map_err(err)?;
            let labels: Vec<String> = labels
                .split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            if rows.insert(ty, labels).is_some() {
                return Err(err(format!("duplicate row for {ty}")));
            }
        }
        for ty in NeType::ALL {
            if !rows.contains_key(ty) {
                return Err(NerError::MissingType(*ty));
            }
        }
        Ok(NeTypeMapping { rows })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, NerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn labels(&self, ty: NeType) -> &[String] {
        self.rows.get(&ty).map_or(&[], Vec::as_slice)
    }

    pub fn accepts(&self, ty: NeType, label: &str) -> bool {
        self.labels(ty).iter().any(|l| label_matches(l, label))
    }
}

fn label_matches(pattern: &str, label: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => label.starts_with(prefix),
        None => pattern == label,
    }
}

/// The longest 1–4 digit token of the span, the earliest among equals, so
/// that "15 April 1912" yields 1912.
fn year_token(doc: &AnnotatedDocument, span: Span) -> Option<(usize, u32)> {
    span.range()
        .filter_map(|i| {
            let s = &doc.segments[i].surface;
            (!s.is_empty() && s.len() <= 4 && s.chars().all(|c| c.is_ascii_digit()))
                .then(|| s.parse().ok().map(|y| (i, y, s.len())))
                .flatten()
        })
        .min_by_key(|&(i, _, len)| (std::cmp::Reverse(len), i))
        .map(|(i, y, _)| (i, y))
}

fn word_positions(doc: &AnnotatedDocument, span: Span) -> Vec<usize> {
    span.range().filter(|&i| !doc.segments[i].is_punctuation()).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NerMentions {
    pub mentions: Vec<EntityMention>,
    /// The document carries no NE annotation layer.
    pub missing_layer: bool,
}

/// Annotations whose label maps to the question's NE type. Years and
/// centuries come from the longest 1–4 digit token of a date; a first name or
/// surname is the first or last word of a multi-word person annotation
/// carrying one of the PERSON labels.
pub fn ner_mentions(doc: &AnnotatedDocument, model: &QuestionModel, mapping: &NeTypeMapping) -> NerMentions {
    let Some(annotations) = &doc.ne_annotations else {
        return NerMentions {
            mentions: Vec::new(),
            missing_layer: true,
        };
    };
    let Some(ty) = model.ne_type else {
        return NerMentions::default();
    };
    let mut out = Vec::new();
    for a in annotations {
        if !mapping.accepts(ty, &a.label) {
            continue;
        }
        let mut span = a.span;
        let mut value = None;
        match ty {
            NeType::Year | NeType::Century => {
                let Some((i, year)) = year_token(doc, a.span) else { continue };
                span = Span::new(i, i + 1);
                value = Some(if ty == NeType::Year {
                    year as f64
                } else {
                    year.div_ceil(100) as f64
                });
            }
            NeType::Name | NeType::Surname if mapping.accepts(NeType::Person, &a.label) => {
                let words = word_positions(doc, a.span);
                if words.len() > 1 {
                    let i = if ty == NeType::Name { words[0] } else { words[words.len() - 1] };
                    span = Span::new(i, i + 1);
                }
            }
            _ => {}
        }
        let mut m = EntityMention::new(doc, span, MentionKind::Ner);
        m.label = Some(a.label.clone());
        m.matched_name = doc.text(a.span);
        m.value = value;
        out.push(m);
    }
    NerMentions {
        mentions: out,
        missing_layer: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numeral {
    /// `None` for indeterminate words such as "several".
    pub value: Option<f64>,
    pub scale: bool,
}

/// `word<TAB>value<TAB>scale?`; a value of `?` marks an indeterminate numeral.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NumeralLexicon {
    words: HashMap<String, Numeral>,
}

impl NumeralLexicon {
    pub fn parse(text: &str) -> Result<Self, NerError> {
        let mut words = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| NerError::Parse {
                file: "numeral lexicon",
                line: n + 1,
                message: message.to_string(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&f.len()) || f[0].is_empty() {
                return Err(err("expected word<TAB>value[<TAB>scale]"));
            }
            let value = match f[1] {
                "?" => None,
                v => Some(v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err("bad value"))?),
            };
            let scale = match f.get(2).copied() {
                None | Some("") => false,
                Some("scale") => true,
                Some(_) => return Err(err("third column must be `scale`")),
            };
            words.insert(f[0].to_lowercase(), Numeral { value, scale });
        }
        Ok(NumeralLexicon { words })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, NerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, seg: &Segment) -> Option<Numeral> {
        self.words
            .get(&seg.lemma.to_lowercase())
            .or_else(|| self.words.get(&seg.surface.to_lowercase()))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantMention {
    pub span: Span,
    /// `None` when a numeral in the chain is indeterminate.
    pub value: Option<f64>,
    pub unit_lemma: Option<String>,
}

impl QuantMention {
    pub fn kind(&self) -> &'static str {
        if self.unit_lemma.is_some() {
            QUANT_QUANTITY
        } else {
            QUANT_NUMBER
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Digits(&'a str),
    Dot,
    Comma,
    Word(Numeral),
}

fn quant_token<'a>(seg: &'a Segment, lexicon: &NumeralLexicon) -> Option<Tok<'a>> {
    let s = seg.surface.as_str();
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_digit()) {
        return Some(Tok::Digits(s));
    }
    match s {
        "." => Some(Tok::Dot),
        "," => Some(Tok::Comma),
        _ => match lexicon.get(seg) {
            Some(n) => Some(Tok::Word(n)),
            None if seg.class == TagClass::Numeral => Some(Tok::Word(Numeral { value: None, scale: false })),
            None => None,
        },
    }
}

/// Value of a complete chain, `Some(None)` when indeterminate, `None` when the
/// chain does not parse. Digits may be followed by 3-digit groups (optionally
/// after a period) and a comma plus decimals; numeral words follow, scale
/// words multiplying what precedes them.
fn parse_chain(toks: &[Tok]) -> Option<Option<f64>> {
    let mut i = 0;
    let mut digits = String::new();
    if let Some(Tok::Digits(d)) = toks.first() {
        digits.push_str(d);
        i = 1;
        loop {
            match (toks.get(i), toks.get(i + 1)) {
                (Some(Tok::Dot), Some(Tok::Digits(g))) if g.len() == 3 => {
                    digits.push_str(g);
                    i += 2;
                }
                (Some(Tok::Digits(g)), _) if g.len() == 3 => {
                    digits.push_str(g);
                    i += 1;
                }
                _ => break,
            }
        }
        if let (Some(Tok::Comma), Some(Tok::Digits(f))) = (toks.get(i), toks.get(i + 1)) {
            digits.push('.');
            digits.push_str(f);
            i += 2;
        }
    }
    let mut total: Option<f64> = Some(0.0);
    let mut current: Option<f64> = if digits.is_empty() { Some(0.0) } else { digits.parse().ok() };
    let mut any = !digits.is_empty();
    for t in &toks[i..] {
        let Tok::Word(n) = t else { return None };
        any = true;
        if n.scale {
            let base = match current {
                Some(0.0) => Some(1.0),
                c => c,
            };
            current = base.zip(n.value).map(|(b, v)| b * v);
            total = total.zip(current).map(|(t, c)| t + c);
            current = Some(0.0);
        } else {
            current = current.zip(n.value).map(|(c, v)| c + v);
        }
    }
    if !any {
        return None;
    }
    Some(total.zip(current).map(|(t, c)| t + c))
}

/// Checks that `lemma`'s first sense lies at or below the unit synset.
pub fn is_unit_of_measurement(lemma: &str, graph: &TaxonomyGraph, unit: Option<&SynsetId>) -> Result<bool, NerError> {
    let unit = unit.ok_or(NerError::NoUnitSynset)?;
    if !graph.contains(unit) {
        return Err(NerError::UnknownUnitSynset(unit.clone()));
    }
    let Some(s) = graph
        .first_sense_synset(lemma)
        .or_else(|| graph.first_sense_synset(&lemma.to_lowercase()))
    else {
        return Ok(false);
    };
    Ok(graph.is_hypernym_or_equal(unit, &s.id).unwrap_or(false))
}

/// Greedy left-to-right scan for numbers; a following unit of measurement
/// turns a number into a quantity.
pub fn quant_scan(
    doc: &AnnotatedDocument,
    graph: &TaxonomyGraph,
    lexicon: &NumeralLexicon,
    unit: Option<&SynsetId>,
) -> Result<Vec<QuantMention>, NerError> {
    let toks: Vec<Option<Tok>> = doc.segments.iter().map(|s| quant_token(s, lexicon)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let run = toks[i..].iter().take(MAX_CHAIN).take_while(|t| t.is_some()).count();
        let run_toks: Vec<Tok> = toks[i..i + run].iter().map(|t| t.expect("run is all tokens")).collect();
        let found = (1..=run).rev().find_map(|len| parse_chain(&run_toks[..len]).map(|v| (len, v)));
        let Some((len, value)) = found else {
            i += 1;
            continue;
        };
        let mut end = i + len;
        let mut unit_lemma = None;
        if let Some(next) = doc.segments.get(end) {
            if !next.is_punctuation() && is_unit_of_measurement(&next.lemma, graph, unit)? {
                unit_lemma = Some(next.lemma.clone());
                end += 1;
            }
        }
        out.push(QuantMention {
            span: Span::new(i, end),
            value,
            unit_lemma,
        });
        i = end;
    }
    Ok(out)
}

/// Parses the first numeric chain in already-annotated text.
pub fn parse_number(doc: &AnnotatedDocument, lexicon: &NumeralLexicon) -> Option<f64> {
    let toks: Vec<Option<Tok>> = doc.segments.iter().map(|s| quant_token(s, lexicon)).collect();
    for i in 0..toks.len() {
        let run = toks[i..].iter().take(MAX_CHAIN).take_while(|t| t.is_some()).count();
        let run_toks: Vec<Tok> = toks[i..i + run].iter().map(|t| t.expect("run is all tokens")).collect();
        if let Some(v) = (1..=run).rev().find_map(|len| parse_chain(&run_toks[..len])) {
            return v;
        }
    }
    None
}

/// Quant mentions whose kind maps to the question's NE type.
pub fn quant_mentions(
    doc: &AnnotatedDocument,
    model: &QuestionModel,
    mapping: &NeTypeMapping,
    graph: &TaxonomyGraph,
    lexicon: &NumeralLexicon,
    unit: Option<&SynsetId>,
) -> Result<Vec<EntityMention>, NerError> {
    let Some(ty) = model.ne_type else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for q in quant_scan(doc, graph, lexicon, unit)? {
        if !mapping.accepts(ty, q.kind()) {
            continue;
        }
        let mut m = EntityMention::new(doc, q.span, MentionKind::Quant);
        m.label = Some(q.kind().to_string());
        m.matched_name = m.text.clone();
        m.value = q.value;
        out.push(m);
    }
    Ok(out)
}

/// Everything the three mention sources need.
pub struct MentionSources<'a> {
    pub graph: &'a TaxonomyGraph,
    pub lib: &'a EntityLibrary,
    pub trie: &'a EntityTrie,
    pub mapping: &'a NeTypeMapping,
    pub numerals: &'a NumeralLexicon,
    pub unit_synset: Option<&'a SynsetId>,
    pub window_cap: usize,
}

/// Concatenates the requested sources. A mention repeating the span and text
/// of a mention from another source is folded into it, recording both
/// provenances.
pub fn hybrid_mentions(
    doc: &AnnotatedDocument,
    model: &QuestionModel,
    sources: &BTreeSet<MentionKind>,
    ctx: &MentionSources,
) -> Result<Vec<EntityMention>, NerError> {
    let mut all = Vec::new();
    if sources.contains(&MentionKind::DeepEr) && model.focus_synset.is_some() {
        let found = scan_document(doc, ctx.trie, ctx.window_cap);
        all.extend(filter_compatible(found, model, ctx.graph, ctx.lib).unwrap_or_default());
    }
    if sources.contains(&MentionKind::Ner) {
        all.extend(ner_mentions(doc, model, ctx.mapping).mentions);
    }
    if sources.contains(&MentionKind::Quant) {
        all.extend(quant_mentions(doc, model, ctx.mapping, ctx.graph, ctx.numerals, ctx.unit_synset)?);
    }
    Ok(merge_mentions(all))
}

pub fn merge_mentions(mentions: Vec<EntityMention>) -> Vec<EntityMention> {
    let mut out: Vec<EntityMention> = Vec::with_capacity(mentions.len());
    for m in mentions {
        let twin = out
            .iter_mut()
            .find(|o| o.span == m.span && o.text == m.text && !o.provenance.contains(&m.kind));
        match twin {
            Some(o) => o.provenance.extend(m.provenance),
            None => out.push(m),
        }
    }
    out
}
