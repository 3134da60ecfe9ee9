//! Inverted index over surface and base-form layers, fuzzy OR search and the
//! scaled IDF weights used for scoring contexts.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AnnotatedDocument;
use crate::taxonomy::hex_digest;

const MAGIC: &[u8; 8] = b"DEEPERIX";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Surface,
    #[default]
    Base,
}

impl std::str::FromStr for Layer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "surface" => Ok(Layer::Surface),
            "base" => Ok(Layer::Base),
            _ => Err(format!("unknown layer {s:?} (expected surface or base)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "mode")]
pub enum Matching {
    Exact,
    Fuzzy { max_distance: usize, prefix_length: usize },
}

impl Default for Matching {
    fn default() -> Self {
        Matching::Fuzzy {
            max_distance: 3,
            prefix_length: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchQuery {
    pub terms: Vec<String>,
    pub matching: Matching,
    pub layer: Layer,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index is empty")]
    Empty,
    #[error("not an index file")]
    BadMagic,
    #[error("unsupported index version {0}")]
    Version(u32),
    #[error("index checksum mismatch")]
    Checksum,
    #[error("corrupt index: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Postings = BTreeMap<String, Vec<(u32, u32)>>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Index {
    doc_ids: Vec<String>,
    surface: Postings,
    base: Postings,
    min_df: usize,
    pub corpus_digest: String,
}

fn add_terms(postings: &mut Postings, doc: u32, terms: impl Iterator<Item = String>) {
    let mut tf: HashMap<String, u32> = HashMap::new();
    for t in terms {
        *tf.entry(t).or_default() += 1;
    }
    for (t, n) in tf {
        postings.entry(t).or_default().push((doc, n));
    }
}

impl Index {
    pub fn build(docs: &[AnnotatedDocument]) -> Index {
        let mut idx = Index {
            corpus_digest: crate::entity_library::corpus_digest(docs),
            ..Default::default()
        };
        for (n, d) in docs.iter().enumerate() {
            let n = n as u32;
            idx.doc_ids.push(d.doc_id.clone());
            let words = || d.segments.iter().filter(|s| !s.is_punctuation() && !s.is_paragraph_marker());
            let title = d.title.split_whitespace().map(str::to_lowercase);
            add_terms(&mut idx.surface, n, words().map(|s| s.surface.to_lowercase()).chain(title));
            add_terms(
                &mut idx.base,
                n,
                words().map(|s| s.lemma.to_lowercase()).chain(d.title_base_forms()),
            );
        }
        for p in idx.surface.values_mut().chain(idx.base.values_mut()) {
            p.sort_unstable();
        }
        idx.finish();
        idx
    }

    fn finish(&mut self) {
        self.min_df = self.base.values().map(Vec::len).min().unwrap_or(0);
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    fn layer(&self, layer: Layer) -> &Postings {
        match layer {
            Layer::Surface => &self.surface,
            Layer::Base => &self.base,
        }
    }

    pub fn vocabulary(&self, layer: Layer) -> impl Iterator<Item = &str> {
        self.layer(layer).keys().map(String::as_str)
    }

    /// Base-form document frequency.
    pub fn df(&self, term: &str) -> usize {
        self.base.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, layer: Layer, term: &str) -> &[(u32, u32)] {
        self.layer(layer).get(term).map_or(&[], Vec::as_slice)
    }

    /// `log(|D|/df) / max log(|D|/df_j)` over the base-form vocabulary; unseen
    /// terms weigh 1.
    pub fn idf_weight(&self, term: &str) -> Result<f64, IndexError> {
        idf_from_counts(self.doc_count(), self.df(term), self.min_df)
    }

    /// Vocabulary terms sharing the first `prefix_length` characters with
    /// `term` and within `max_distance` edits of it.
    pub fn fuzzy_expand(&self, term: &str, layer: Layer, max_distance: usize, prefix_length: usize) -> Vec<&str> {
        let prefix: String = term.chars().take(prefix_length).collect();
        self.layer(layer)
            .range::<str, _>((std::ops::Bound::Included(prefix.as_str()), std::ops::Bound::Unbounded))
            .take_while(|(k, _)| k.starts_with(&prefix))
            .filter(|(k, _)| strsim::levenshtein(k, term) <= max_distance)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    fn expand(&self, term: &str, query: &SearchQuery) -> Vec<&str> {
        match query.matching {
            Matching::Exact => self.layer(query.layer).get_key_value(term).map(|(k, _)| k.as_str()).into_iter().collect(),
            Matching::Fuzzy {
                max_distance,
                prefix_length,
            } => self.fuzzy_expand(term, query.layer, max_distance, prefix_length.max(1)),
        }
    }

    /// Documents containing any expansion of any term, scored by the summed
    /// weights of the query terms they contain; ties by ascending doc id.
    pub fn search(&self, query: &SearchQuery, n: usize) -> Result<Vec<(String, f64)>, IndexError> {
        if self.doc_count() == 0 {
            return Ok(Vec::new());
        }
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in &query.terms {
            let w = self.idf_weight(term)?;
            let mut hit: Vec<u32> = self
                .expand(term, query)
                .into_iter()
                .flat_map(|k| self.postings(query.layer, k).iter().map(|&(d, _)| d))
                .collect();
            hit.sort_unstable();
            hit.dedup();
            for d in hit {
                *scores.entry(d).or_default() += w;
            }
        }
        let mut ranked: Vec<(String, f64)> = scores
            .into_iter()
            .map(|(d, s)| (self.doc_ids[d as usize].clone(), s))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(n);
        Ok(ranked)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        put_u32(&mut body, self.doc_ids.len() as u32);
        for d in &self.doc_ids {
            put_str(&mut body, d);
        }
        for p in [&self.surface, &self.base] {
            put_u32(&mut body, p.len() as u32);
            for (term, list) in p {
                put_str(&mut body, term);
                put_u32(&mut body, list.len() as u32);
                for &(d, tf) in list {
                    put_u32(&mut body, d);
                    put_u32(&mut body, tf);
                }
            }
        }
        let mut out = Vec::with_capacity(body.len() + 128);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, INDEX_VERSION);
        put_str(&mut out, &self.corpus_digest);
        put_str(&mut out, &hex_digest(&body));
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Index, IndexError> {
        let mut r = Reader(bytes);
        if r.take(8)? != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(IndexError::Version(version));
        }
        let corpus_digest = r.string()?;
        let checksum = r.string()?;
        let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        if len != r.0.len() as u64 {
            return Err(IndexError::Checksum);
        }
        if hex_digest(r.0) != checksum {
            return Err(IndexError::Checksum);
        }
        let docs = r.u32()? as usize;
        let mut doc_ids = Vec::with_capacity(docs.min(r.0.len()));
        for _ in 0..docs {
            doc_ids.push(r.string()?);
        }
        let mut layers = [Postings::new(), Postings::new()];
        for p in &mut layers {
            let terms = r.u32()?;
            let mut last: Option<String> = None;
            for _ in 0..terms {
                let term = r.string()?;
                if last.as_ref().is_some_and(|l| *l >= term) {
                    return Err(IndexError::Corrupt("terms out of order"));
                }
                let count = r.u32()? as usize;
                if count == 0 || count > docs {
                    return Err(IndexError::Corrupt("posting list length"));
                }
                let mut list = Vec::with_capacity(count);
                for _ in 0..count {
                    let d = r.u32()?;
                    let tf = r.u32()?;
                    if d as usize >= docs || list.last().is_some_and(|&(prev, _)| prev >= d) {
                        return Err(IndexError::Corrupt("posting order"));
                    }
                    list.push((d, tf));
                }
                p.insert(term.clone(), list);
                last = Some(term);
            }
        }
        if !r.0.is_empty() {
            return Err(IndexError::Corrupt("trailing bytes"));
        }
        let [surface, base] = layers;
        let mut idx = Index {
            doc_ids,
            surface,
            base,
            min_df: 0,
            corpus_digest,
        };
        idx.finish();
        Ok(idx)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Index, IndexError> {
        Index::from_bytes(&std::fs::read(path)?)
    }
}

/// Scaled IDF from raw counts: `log(d/df) / log(d/min_df)`, unseen (`df == 0`) → 1.
pub fn idf_from_counts(docs: usize, df: usize, min_df: usize) -> Result<f64, IndexError> {
    if docs == 0 {
        return Err(IndexError::Empty);
    }
    if df == 0 {
        return Ok(1.0);
    }
    let max = (docs as f64 / min_df.max(1) as f64).ln();
    if max <= 0.0 {
        return Ok(0.0);
    }
    Ok((docs as f64 / df as f64).ln() / max)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.0.len() < n {
            return Err(IndexError::Corrupt("unexpected end of file"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| IndexError::Corrupt("invalid utf-8"))
    }
}
