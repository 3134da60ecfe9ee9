//! Lexicon-driven annotator for plain text.
//!
//! This is a small stand-in for an external tagging and shallow-parsing
//! cascade: it tokenizes, looks each token up in a `form<TAB>lemma<TAB>tag`
//! lexicon, splits sentences, and marks nominal groups and coordinations with
//! simple adjacency rules. It is used to annotate questions and answer strings
//! and to regenerate the packaged fixture corpus from its plain-text source.
//!
//! Inline `[[label:text]]` markup in the input becomes a named-entity
//! annotation over the tokens of `text`; the label ends at the last colon, so
//! labels such as `placeName:settlement` work. Blank lines separate paragraphs, and a
//! standalone `¶` token is read as a paragraph break too.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{
    AnnotatedDocument, GroupKind, NeAnnotation, PageKind, Segment, Span, SyntacticGroup, TagClass,
    PARAGRAPH_SURFACE, PARAGRAPH_TAG,
};

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("source line {line}: {message}")]
    Source { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
struct Entry {
    lemma: String,
    tag: String,
}

#[derive(Debug, Clone, Default)]
pub struct LexiconTagger {
    entries: HashMap<String, Entry>,
}

/// Output of annotating one text.
#[derive(Debug, Clone, Default)]
pub struct Annotation {
    pub segments: Vec<Segment>,
    pub groups: Vec<SyntacticGroup>,
    pub ne: Vec<NeAnnotation>,
}

const COORDINATORS: &[&str] = &["and", "or", "i", "oraz", "lub"];

fn is_punct_char(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '?' | '!' | '(' | ')' | '[' | ']' | '{' | '}' | '"' | '„' | '”' | '“' | '«' | '»' | '–'
            | '—' | '%'
    )
}

pub fn class_of_tag(tag: &str) -> TagClass {
    match tag {
        "noun" => TagClass::Nominal,
        "num" | "digit" => TagClass::Numeral,
        _ => TagClass::Other,
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(f) => f.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl LexiconTagger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TaggerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, TaggerError> {
        let mut entries = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 || f.iter().any(|x| x.is_empty()) {
                return Err(TaggerError::Lexicon {
                    line: n + 1,
                    message: "expected form<TAB>lemma<TAB>tag".into(),
                });
            }
            entries.insert(
                f[0].to_string(),
                Entry {
                    lemma: f[1].to_string(),
                    tag: f[2].to_string(),
                },
            );
        }
        Ok(LexiconTagger { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, surface: &str) -> (String, String) {
        if surface == PARAGRAPH_SURFACE {
            return (PARAGRAPH_SURFACE.into(), PARAGRAPH_TAG.into());
        }
        if is_digits(surface) {
            return (surface.into(), "digit".into());
        }
        if !surface.chars().any(char::is_alphanumeric) {
            return (surface.into(), "punct".into());
        }
        if let Some(e) = self.entries.get(surface).or_else(|| self.entries.get(&surface.to_lowercase())) {
            return (e.lemma.clone(), e.tag.clone());
        }
        if surface.chars().next().is_some_and(char::is_uppercase) {
            (surface.into(), "noun".into())
        } else {
            (surface.to_lowercase(), "x".into())
        }
    }

    pub fn annotate(&self, text: &str) -> Annotation {
        let (tokens, ne_spans) = tokenize_with_markup(text);
        let mut segments = Vec::with_capacity(tokens.len());
        let mut sentence = 0usize;
        let mut sentence_open = false;
        for (i, surface) in tokens.iter().enumerate() {
            let (lemma, tag) = self.lookup(surface);
            if surface == PARAGRAPH_SURFACE && sentence_open {
                sentence += 1;
            }
            segments.push(Segment {
                surface: surface.clone(),
                class: class_of_tag(&tag),
                lemma,
                tag,
                sentence,
                cap: surface.chars().next().is_some_and(char::is_uppercase),
            });
            sentence_open = true;
            let closes = match surface.as_str() {
                "?" | "!" | PARAGRAPH_SURFACE => true,
                "." => {
                    let prev_digit = i > 0 && is_digits(&tokens[i - 1]);
                    let next_digit = tokens.get(i + 1).is_some_and(|t| is_digits(t));
                    !(prev_digit && next_digit)
                }
                _ => false,
            };
            if closes && i + 1 < tokens.len() {
                sentence += 1;
                sentence_open = false;
            }
        }
        let groups = chunk(&segments);
        let ne = ne_spans
            .into_iter()
            .map(|(label, span)| NeAnnotation { label, span })
            .collect();
        Annotation { segments, groups, ne }
    }

    pub fn annotate_document(
        &self,
        doc_id: &str,
        title: &str,
        page_kind: PageKind,
        redirect_target: Option<String>,
        text: &str,
    ) -> AnnotatedDocument {
        let a = self.annotate(text);
        AnnotatedDocument {
            doc_id: doc_id.to_string(),
            title: title.to_string(),
            page_kind,
            redirect_target,
            title_lemmas: None,
            segments: a.segments,
            groups: a.groups,
            ne_annotations: if a.ne.is_empty() { None } else { Some(a.ne) },
        }
    }

    /// Annotates a question or answer string as a single pseudo-document.
    pub fn annotate_snippet(&self, id: &str, text: &str) -> AnnotatedDocument {
        self.annotate_document(id, "", PageKind::Article, None, text)
    }
}

/// Splits text into tokens, returning `[[label:text]]` spans as token ranges.
fn tokenize_with_markup(text: &str) -> (Vec<String>, Vec<(String, Span)>) {
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    let paragraphs = split_paragraphs(text);
    for (pi, para) in paragraphs.iter().enumerate() {
        if pi > 0 {
            tokens.push(PARAGRAPH_SURFACE.to_string());
        }
        let mut rest: &str = para;
        while !rest.is_empty() {
            match rest.find("[[") {
                Some(open) => {
                    tokenize_plain(&rest[..open], &mut tokens);
                    let after = &rest[open + 2..];
                    let close = after.find("]]");
                    match (close, close.and_then(|c| after[..c].rfind(':'))) {
                        (Some(close), Some(colon)) => {
                            let label = after[..colon].trim().to_string();
                            let start = tokens.len();
                            tokenize_plain(&after[colon + 1..close], &mut tokens);
                            if tokens.len() > start && !label.is_empty() {
                                spans.push((label, Span::new(start, tokens.len())));
                            }
                            rest = &after[close + 2..];
                        }
                        _ => {
                            tokenize_plain(&rest[open..], &mut tokens);
                            rest = "";
                        }
                    }
                }
                None => {
                    tokenize_plain(rest, &mut tokens);
                    rest = "";
                }
            }
        }
    }
    (tokens, spans)
}

fn split_paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !cur.trim().is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            cur.clear();
        } else {
            cur.push_str(line);
            cur.push('\n');
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

fn tokenize_plain(text: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = text.chars().collect();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let prev_alnum = i > 0 && chars[i - 1].is_alphanumeric();
        let next = chars.get(i + 1).copied();
        let next_alnum = next.is_some_and(char::is_alphanumeric);
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if c == '\'' && !(prev_alnum && next_alnum) {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else if c == '-' && cur.is_empty() && !next_alnum {
            out.push(c.to_string());
        } else if is_punct_char(c) {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
}

/// Nominal groups are adjective/noun runs ending at their last noun (length ≥ 2,
/// head = last noun); coordinations join adjacent nominal elements with a
/// coordinating conjunction.
fn chunk(segs: &[Segment]) -> Vec<SyntacticGroup> {
    let restore = |s: &Segment| {
        if s.cap {
            capitalize(&s.lemma)
        } else {
            s.lemma.clone()
        }
    };
    let mut groups = Vec::new();
    // nominal elements as (span, lemma) in order, single nouns included
    let mut elements: Vec<(Span, String)> = Vec::new();
    let mut i = 0;
    while i < segs.len() {
        let np_tag = |s: &Segment| (s.tag == "adj" || s.tag == "noun") && !s.is_paragraph_marker();
        if !np_tag(&segs[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < segs.len() && np_tag(&segs[i]) && segs[i].sentence == segs[start].sentence {
            i += 1;
        }
        if let Some(last_noun) = (start..i).rev().find(|&k| segs[k].tag == "noun") {
            let span = Span::new(start, last_noun + 1);
            let lemma = segs[span.range()].iter().map(restore).collect::<Vec<_>>().join(" ");
            if span.len() >= 2 {
                groups.push(SyntacticGroup {
                    span,
                    kind: GroupKind::Nominal,
                    head: Span::new(last_noun, last_noun + 1),
                    lemma: Some(lemma.clone()),
                });
            }
            elements.push((span, lemma));
        }
    }
    let mut e = 0;
    while e < elements.len() {
        let mut last = e;
        while last + 1 < elements.len() {
            let gap_start = elements[last].0.end;
            let next = &elements[last + 1].0;
            let is_conj = next.start == gap_start + 1
                && COORDINATORS.contains(&segs[gap_start].surface.to_lowercase().as_str());
            if !is_conj {
                break;
            }
            last += 1;
        }
        if last > e {
            let span = Span::new(elements[e].0.start, elements[last].0.end);
            let mut lemma = elements[e].1.clone();
            for k in e + 1..=last {
                lemma.push(' ');
                lemma.push_str(&segs[elements[k].0.start - 1].surface.to_lowercase());
                lemma.push(' ');
                lemma.push_str(&elements[k].1);
            }
            groups.push(SyntacticGroup {
                span,
                kind: GroupKind::Coordination,
                head: span,
                lemma: Some(lemma),
            });
        }
        e = last + 1;
    }
    groups.sort_by(|a, b| a.span.start.cmp(&b.span.start).then(b.span.end.cmp(&a.span.end)));
    groups
}

/// One record of the plain-text fixture source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecord {
    pub doc_id: String,
    pub page_kind: PageKind,
    pub title: String,
    pub redirect_target: Option<String>,
    pub body: String,
}

/// Parses `=== id | kind | title` headed records; redirects use
/// `=== id | redirect | Name -> Target` and have no body.
pub fn parse_source(text: &str) -> Result<Vec<SourceRecord>, TaggerError> {
    let mut out: Vec<SourceRecord> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(header) = line.strip_prefix("=== ") {
            let parts: Vec<&str> = header.split(" | ").map(str::trim).collect();
            let err = |message: &str| TaggerError::Source {
                line: n + 1,
                message: message.to_string(),
            };
            if parts.len() != 3 {
                return Err(err("header must be `=== id | kind | title`"));
            }
            let (kind, title, target) = match parts[1] {
                "article" => (PageKind::Article, parts[2].to_string(), None),
                "disambiguation" => (PageKind::Disambiguation, parts[2].to_string(), None),
                "redirect" => {
                    let (name, target) = parts[2].split_once(" -> ").ok_or_else(|| err("redirect needs `Name -> Target`"))?;
                    (PageKind::Redirect, name.trim().to_string(), Some(target.trim().to_string()))
                }
                _ => return Err(err("unknown page kind")),
            };
            out.push(SourceRecord {
                doc_id: parts[0].to_string(),
                page_kind: kind,
                title,
                redirect_target: target,
                body: String::new(),
            });
        } else if line.starts_with('#') && out.is_empty() {
            continue;
        } else if let Some(rec) = out.last_mut() {
            rec.body.push_str(line);
            rec.body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(TaggerError::Source {
                line: n + 1,
                message: "text before the first record header".into(),
            });
        }
    }
    Ok(out)
}

impl LexiconTagger {
    pub fn annotate_source(&self, records: &[SourceRecord]) -> Vec<AnnotatedDocument> {
        records
            .iter()
            .map(|r| self.annotate_document(&r.doc_id, &r.title, r.page_kind, r.redirect_target.clone(), &r.body))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagger() -> LexiconTagger {
        LexiconTagger::parse(
            "the\tthe\tdet\na\ta\tdet\nis\tbe\tverb\nseabird\tseabird\tnoun\nof\tof\tprep\ntern\ttern\tnoun\n\
             family\tfamily\tnoun\narctic\tarctic\tadj\nit\tit\tpron\nand\tand\tconj\nking\tking\tnoun\n\
             kings\tking\tnoun\nphysicist\tphysicist\tnoun\nchemist\tchemist\tnoun\n",
        )
        .unwrap()
    }

    fn surfaces(a: &Annotation) -> Vec<&str> {
        a.segments.iter().map(|s| s.surface.as_str()).collect()
    }

    #[test]
    fn tokenizes_punctuation_and_numbers() {
        let a = LexiconTagger::new().annotate("It weighs 1.698,88 kg (roughly). Done!");
        assert_eq!(
            surfaces(&a),
            vec!["It", "weighs", "1", ".", "698", ",", "88", "kg", "(", "roughly", ")", ".", "Done", "!"]
        );
        // the period between digits does not end the sentence
        assert_eq!(a.segments[4].sentence, 0);
        assert_eq!(a.segments[12].sentence, 1);
    }

    #[test]
    fn paragraphs_become_markers() {
        let a = LexiconTagger::new().annotate("One two.\n\nThree");
        assert_eq!(surfaces(&a), vec!["One", "two", ".", "¶", "Three"]);
        assert_eq!(a.segments[3].tag, PARAGRAPH_TAG);
        let sentences: Vec<usize> = a.segments.iter().map(|s| s.sentence).collect();
        assert_eq!(sentences, vec![0, 0, 0, 1, 2]);
    }

    #[test]
    fn nominal_group_with_head() {
        let a = tagger().annotate("The Arctic Tern is a seabird of the tern family.");
        let g: Vec<_> = a.groups.iter().map(|g| (g.span, g.head, g.lemma.clone().unwrap())).collect();
        assert_eq!(
            g,
            vec![
                (Span::new(1, 3), Span::new(2, 3), "Arctic Tern".to_string()),
                (Span::new(8, 10), Span::new(9, 10), "tern family".to_string()),
            ]
        );
        assert_eq!(a.segments[0].lemma, "the");
        assert_eq!(a.segments[1].lemma, "arctic");
        assert_eq!(a.segments[2].class, TagClass::Nominal);
    }

    #[test]
    fn coordination_of_single_nouns() {
        let a = tagger().annotate("a physicist and chemist");
        assert_eq!(a.groups.len(), 1);
        assert_eq!(a.groups[0].kind, GroupKind::Coordination);
        assert_eq!(a.groups[0].span, Span::new(1, 4));
        assert_eq!(a.groups[0].lemma.as_deref(), Some("physicist and chemist"));
    }

    #[test]
    fn inline_entity_markup() {
        let a = LexiconTagger::new().annotate("He died in [[date:1925]] in [[placeName:New York]].");
        assert_eq!(a.ne[0].label, "date");
        assert_eq!(a.ne[0].span, Span::new(3, 4));
        assert_eq!(a.ne[1].label, "placeName");
        assert_eq!(a.ne[1].span, Span::new(5, 7));
        assert_eq!(surfaces(&a)[5..8], ["New", "York", "."]);
    }

    #[test]
    fn unknown_words() {
        let a = LexiconTagger::new().annotate("Komorowskiego visited");
        assert_eq!(a.segments[0].tag, "noun");
        assert_eq!(a.segments[0].lemma, "Komorowskiego");
        assert_eq!(a.segments[1].class, TagClass::Other);
    }

    #[test]
    fn source_records() {
        let src = "=== d1 | article | Arctic Tern\nText one.\n\n=== d2 | redirect | Sea Swallow -> Arctic Tern\n";
        let recs = parse_source(src).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].redirect_target.as_deref(), Some("Arctic Tern"));
        assert_eq!(recs[1].title, "Sea Swallow");
        assert!(parse_source("=== d1 | weird | X\n").is_err());
    }

    #[test]
    fn every_annotation_validates() {
        let d = tagger().annotate_document("x", "X", PageKind::Article, None, "The kings and the tern family. (A) \"b\"\n\nIt is.");
        d.validate().unwrap();
    }
}
