//! Pre-annotated documents and their line-delimited JSON file format.
//!
//! Each line of a corpus file is one [`AnnotatedDocument`]. Paragraph breaks are
//! reserved segments with surface `¶` and tag `PARA`. A corpus path may be a
//! single `.jsonl` file or a directory, in which case its `.jsonl` files are read
//! in file-name order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PARAGRAPH_SURFACE: &str = "¶";
pub const PARAGRAPH_TAG: &str = "PARA";

/// Half-open segment index range `[start, end)`. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    pub fn covers(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from(a: [usize; 2]) -> Self {
        Span::new(a[0], a[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagClass {
    Nominal,
    Numeral,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub surface: String,
    pub lemma: String,
    pub tag: String,
    pub class: TagClass,
    pub sentence: usize,
    pub cap: bool,
}

impl Segment {
    pub fn is_paragraph_marker(&self) -> bool {
        self.surface == PARAGRAPH_SURFACE && self.tag == PARAGRAPH_TAG
    }

    /// No alphanumeric character at all.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Nominal,
    Coordination,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntacticGroup {
    pub span: Span,
    pub kind: GroupKind,
    pub head: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageKind {
    Article,
    Disambiguation,
    Redirect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeAnnotation {
    pub label: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub title: String,
    pub page_kind: PageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect_target: Option<String>,
    /// Base forms of the title; whitespace tokens of `title` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_lemmas: Option<Vec<String>>,
    pub segments: Vec<Segment>,
    pub groups: Vec<SyntacticGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne_annotations: Option<Vec<NeAnnotation>>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}:{line}: malformed record (doc {doc}): {message}", path.display(), doc = doc_id.as_deref().unwrap_or("?"))]
    Malformed {
        path: PathBuf,
        line: usize,
        doc_id: Option<String>,
        message: String,
    },
    #[error("doc {doc_id}: {message}")]
    Invalid { doc_id: String, message: String },
    #[error("segment index {index} out of bounds (doc has {len} segments)")]
    OutOfBounds { index: usize, len: usize },
    #[error("doc {0}: first paragraph requested for a redirect page")]
    RedirectPage(String),
    #[error("corpus I/O on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AnnotatedDocument {
    /// Checks every structural invariant of the record.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |message: String| CorpusError::Invalid {
            doc_id: self.doc_id.clone(),
            message,
        };
        match (self.page_kind, &self.redirect_target) {
            (PageKind::Redirect, None) => return Err(invalid("redirect page without redirectTarget".into())),
            (PageKind::Article | PageKind::Disambiguation, Some(_)) => {
                return Err(invalid("redirectTarget on a non-redirect page".into()))
            }
            _ => {}
        }
        let n = self.segments.len();
        let mut last_sentence = 0;
        for (i, s) in self.segments.iter().enumerate() {
            if s.surface.is_empty() {
                return Err(invalid(format!("segment {i} has an empty surface")));
            }
            if s.sentence < last_sentence {
                return Err(invalid(format!("segment {i} decreases the sentence index")));
            }
            last_sentence = s.sentence;
        }
        let in_bounds = |span: &Span| span.start <= span.end && span.end <= n;
        for (gi, g) in self.groups.iter().enumerate() {
            if !in_bounds(&g.span) || g.span.is_empty() {
                return Err(invalid(format!("group {gi} span {:?} out of bounds", g.span)));
            }
            if !g.span.covers(&g.head) || !in_bounds(&g.head) {
                return Err(invalid(format!("group {gi} head {:?} not inside its span", g.head)));
            }
        }
        let mut spans: Vec<Span> = self.groups.iter().map(|g| g.span).collect();
        spans.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
        let mut open: Vec<Span> = Vec::new();
        for s in spans {
            while open.last().is_some_and(|top| top.end <= s.start) {
                open.pop();
            }
            if let Some(top) = open.last() {
                if !top.covers(&s) {
                    return Err(invalid(format!("groups {top:?} and {s:?} cross")));
                }
            }
            open.push(s);
        }
        if let Some(ne) = &self.ne_annotations {
            for a in ne {
                if !in_bounds(&a.span) || a.span.is_empty() {
                    return Err(invalid(format!("annotation `{}` span {:?} out of bounds", a.label, a.span)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn full_span(&self) -> Span {
        Span::new(0, self.segments.len())
    }

    /// Maximal contiguous range sharing the segment's sentence index.
    pub fn sentence_span(&self, index: usize) -> Result<Span, CorpusError> {
        let segs = &self.segments;
        if index >= segs.len() {
            return Err(CorpusError::OutOfBounds { index, len: segs.len() });
        }
        let sentence = segs[index].sentence;
        let mut start = index;
        while start > 0 && segs[start - 1].sentence == sentence {
            start -= 1;
        }
        let mut end = index + 1;
        while end < segs.len() && segs[end].sentence == sentence {
            end += 1;
        }
        Ok(Span::new(start, end))
    }

    /// Segments before the first paragraph marker (whole document if none).
    pub fn first_paragraph(&self) -> Result<Span, CorpusError> {
        if self.page_kind == PageKind::Redirect {
            return Err(CorpusError::RedirectPage(self.doc_id.clone()));
        }
        let end = self
            .segments
            .iter()
            .position(Segment::is_paragraph_marker)
            .unwrap_or(self.segments.len());
        Ok(Span::new(0, end))
    }

    /// All paragraphs, split on markers; empty paragraphs are dropped.
    pub fn paragraphs(&self) -> Vec<Span> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, s) in self.segments.iter().enumerate() {
            if s.is_paragraph_marker() {
                if i > start {
                    out.push(Span::new(start, i));
                }
                start = i + 1;
            }
        }
        if self.segments.len() > start {
            out.push(Span::new(start, self.segments.len()));
        }
        out
    }

    /// Surface text of a span with conventional spacing around punctuation.
    pub fn text(&self, span: Span) -> String {
        render(self.segments[span.range()].iter().map(|s| s.surface.as_str()))
    }

    /// Lower-cased lemmas of the non-punctuation segments in `span`.
    pub fn base_forms(&self, span: Span) -> impl Iterator<Item = String> + '_ {
        self.segments[span.range()]
            .iter()
            .filter(|s| !s.is_punctuation() && !s.is_paragraph_marker())
            .map(|s| s.lemma.to_lowercase())
    }

    pub fn title_base_forms(&self) -> Vec<String> {
        match &self.title_lemmas {
            Some(l) => l.iter().map(|s| s.to_lowercase()).collect(),
            None => self
                .title
                .split_whitespace()
                .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
                .filter(|t| !t.is_empty())
                .map(str::to_lowercase)
                .collect(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }
}

fn no_space_before(tok: &str) -> bool {
    matches!(tok, "." | "," | ";" | ":" | "?" | "!" | ")" | "]" | "}" | "”" | "»" | "%")
}

fn no_space_after(tok: &str) -> bool {
    matches!(tok, "(" | "[" | "{" | "„" | "“" | "«")
}

/// Joins tokens with single spaces, except before closing punctuation and after
/// opening brackets.
pub fn render<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    render_with_offsets(tokens).0
}

/// Like [`render`], also returning each token's byte range in the output.
pub fn render_with_offsets<'a>(tokens: impl IntoIterator<Item = &'a str>) -> (String, Vec<(usize, usize)>) {
    let mut out = String::new();
    let mut offsets = Vec::new();
    let mut prev: Option<&str> = None;
    for tok in tokens {
        if let Some(p) = prev {
            if !no_space_before(tok) && !no_space_after(p) {
                out.push(' ');
            }
        }
        let start = out.len();
        out.push_str(tok);
        offsets.push((start, out.len()));
        prev = Some(tok);
    }
    (out, offsets)
}

/// Record counts per page kind, plus any fixture-specific expectations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub documents: usize,
    pub article: usize,
    pub disambiguation: usize,
    pub redirect: usize,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl CorpusManifest {
    pub fn count<'a>(docs: impl IntoIterator<Item = &'a AnnotatedDocument>) -> Self {
        let mut m = CorpusManifest::default();
        for d in docs {
            m.documents += 1;
            match d.page_kind {
                PageKind::Article => m.article += 1,
                PageKind::Disambiguation => m.disambiguation += 1,
                PageKind::Redirect => m.redirect += 1,
            }
        }
        m
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: e.line(),
            doc_id: None,
            message: e.to_string(),
        })
    }
}

/// Parses and validates one corpus line.
pub fn parse_record(line: &str) -> Result<AnnotatedDocument, (Option<String>, String)> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| (None, e.to_string()))?;
    let doc_id = value.get("docId").and_then(|v| v.as_str()).map(str::to_string);
    let doc: AnnotatedDocument = serde_json::from_value(value).map_err(|e| (doc_id.clone(), e.to_string()))?;
    doc.validate().map_err(|e| (doc_id, e.to_string()))?;
    Ok(doc)
}

/// Streaming reader over a corpus file or directory.
pub struct CorpusReader {
    files: std::vec::IntoIter<PathBuf>,
    current: Option<(PathBuf, Lines<BufReader<File>>, usize)>,
}

/// Opens a corpus path for streaming. Documents are yielded in file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusReader, CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let meta = std::fs::metadata(path).map_err(io)?;
    let files = if meta.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    Ok(CorpusReader {
        files: files.into_iter(),
        current: None,
    })
}

/// Reads a whole corpus into memory.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<AnnotatedDocument>, CorpusError> {
    load_corpus(path)?.collect()
}

/// Parses corpus records from an in-memory string.
pub fn parse_corpus_str(text: &str) -> Result<Vec<AnnotatedDocument>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_record(l).map_err(|(doc_id, message)| CorpusError::Malformed {
                path: PathBuf::from("<memory>"),
                line: i + 1,
                doc_id,
                message,
            })
        })
        .collect()
}

impl Iterator for CorpusReader {
    type Item = Result<AnnotatedDocument, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.current.is_none() {
                let path = self.files.next()?;
                match File::open(&path) {
                    Ok(f) => self.current = Some((path, BufReader::new(f).lines(), 0)),
                    Err(source) => return Some(Err(CorpusError::Io { path, source })),
                }
            }
            let (path, lines, lineno) = self.current.as_mut().expect("set above");
            match lines.next() {
                None => self.current = None,
                Some(Err(source)) => {
                    return Some(Err(CorpusError::Io {
                        path: path.clone(),
                        source,
                    }))
                }
                Some(Ok(line)) => {
                    *lineno += 1;
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(parse_record(&line).map_err(|(doc_id, message)| CorpusError::Malformed {
                        path: path.clone(),
                        line: *lineno,
                        doc_id,
                        message,
                    }));
                }
            }
        }
    }
}
