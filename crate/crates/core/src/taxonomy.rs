//! Wordnet-style taxonomy: synsets, lexemes with sense numbers and hypernym edges.
//!
//! The graph is immutable once loaded. Lookups go lemma → lexemes (ordered by
//! ascending sense number) → synset, and hypernymy is walked upward through the
//! parent lists.
//!
//! File format (UTF-8, one record per line, `#` starts a comment line):
//!
//! ```text
//! S<TAB>synsetId<TAB>lemma:sense{,lemma:sense}
//! H<TAB>childId<TAB>parentId
//! ```

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynsetId(pub String);

impl SynsetId {
    pub fn new(id: impl Into<String>) -> Self {
        SynsetId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SynsetId {
    fn from(s: &str) -> Self {
        SynsetId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lexeme {
    pub lemma: String,
    pub sense: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub lexemes: Vec<Lexeme>,
    pub gloss: Option<String>,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate synset id `{0}`")]
    DuplicateSynset(SynsetId),
    #[error("lexeme {lemma}:{sense} appears in more than one synset")]
    DuplicateLexeme { lemma: String, sense: u32 },
    #[error("line {line}: hypernym edge references unknown synset `{id}`")]
    UnknownEndpoint { line: usize, id: SynsetId },
    #[error("hypernym cycle through edge {child} -> {parent}")]
    Cycle { child: SynsetId, parent: SynsetId },
    #[error("unknown synset `{0}`")]
    UnknownSynset(SynsetId),
    #[error("reading taxonomy: {0}")]
    Io(#[from] std::io::Error),
}

/// Immutable hypernymy graph with a lemma index.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyGraph {
    synsets: Vec<Synset>,
    by_id: HashMap<SynsetId, usize>,
    parents: Vec<Vec<usize>>,
    lemma_index: HashMap<String, Vec<(u32, usize)>>,
}

impl TaxonomyGraph {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TaxonomyError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TaxonomyError> {
        let mut synset_lines = Vec::new();
        let mut edge_lines = Vec::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            let err = |message: &str| TaxonomyError::Parse {
                line: lineno,
                message: message.to_string(),
            };
            match fields[0] {
                "S" => {
                    if fields.len() != 3 && fields.len() != 4 {
                        return Err(err("synset record needs 3 fields (4 with gloss)"));
                    }
                    let id = fields[1].trim();
                    if id.is_empty() {
                        return Err(err("empty synset id"));
                    }
                    let mut lexemes = Vec::new();
                    for item in fields[2].split(',') {
                        let (lemma, sense) = item
                            .rsplit_once(':')
                            .ok_or_else(|| err("lexeme must be lemma:sense"))?;
                        let sense: u32 = sense
                            .trim()
                            .parse()
                            .map_err(|_| err("sense number must be a positive integer"))?;
                        let lemma = lemma.trim();
                        if sense == 0 || lemma.is_empty() {
                            return Err(err("sense number must be positive and lemma non-empty"));
                        }
                        lexemes.push(Lexeme {
                            lemma: lemma.to_string(),
                            sense,
                        });
                    }
                    let gloss = fields.get(3).map(|g| g.to_string()).filter(|g| !g.is_empty());
                    synset_lines.push((lineno, Synset { id: SynsetId::new(id), lexemes, gloss }));
                }
                "H" => {
                    if fields.len() != 3 {
                        return Err(err("hypernym record needs 3 fields"));
                    }
                    edge_lines.push((lineno, SynsetId::new(fields[1].trim()), SynsetId::new(fields[2].trim())));
                }
                other => return Err(err(&format!("unknown record kind `{other}`"))),
            }
        }
        let mut builder = TaxonomyBuilder::default();
        for (_, s) in synset_lines {
            builder.add_synset(s)?;
        }
        for (line, child, parent) in edge_lines {
            builder.add_edge_at(line, child, parent)?;
        }
        builder.build()
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.iter()
    }

    pub fn synset(&self, id: &SynsetId) -> Option<&Synset> {
        self.by_id.get(id).map(|&i| &self.synsets[i])
    }

    pub fn contains(&self, id: &SynsetId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn has_lemma(&self, lemma: &str) -> bool {
        self.lemma_index.contains_key(lemma)
    }

    /// Lexemes of a lemma as (sense number, synset), lowest sense first.
    pub fn lexemes(&self, lemma: &str) -> Vec<(u32, &Synset)> {
        self.lemma_index
            .get(lemma)
            .map(|v| v.iter().map(|&(s, i)| (s, &self.synsets[i])).collect())
            .unwrap_or_default()
    }

    /// Synset of the lowest-numbered sense of `lemma`.
    pub fn first_sense_synset(&self, lemma: &str) -> Option<&Synset> {
        self.lemma_index
            .get(lemma)
            .and_then(|v| v.first())
            .map(|&(_, i)| &self.synsets[i])
    }

    /// Direct hypernyms of a synset.
    pub fn parents(&self, id: &SynsetId) -> Result<Vec<&SynsetId>, TaxonomyError> {
        let i = self.index_of(id)?;
        Ok(self.parents[i].iter().map(|&p| &self.synsets[p].id).collect())
    }

    /// All synsets reachable through one or more hypernym edges, excluding `id`.
    pub fn hypernym_closure(&self, id: &SynsetId) -> Result<BTreeSet<SynsetId>, TaxonomyError> {
        Ok(self
            .ancestors_bfs(id)?
            .into_iter()
            .map(|i| self.synsets[i].id.clone())
            .collect())
    }

    /// Ancestors in breadth-first order (nearest first), each reported once.
    pub fn ancestors_nearest_first(&self, id: &SynsetId) -> Result<Vec<&SynsetId>, TaxonomyError> {
        Ok(self
            .ancestors_bfs(id)?
            .into_iter()
            .map(|i| &self.synsets[i].id)
            .collect())
    }

    fn ancestors_bfs(&self, id: &SynsetId) -> Result<Vec<usize>, TaxonomyError> {
        let start = self.index_of(id)?;
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut queue: VecDeque<usize> = self.parents[start].iter().copied().collect();
        while let Some(i) = queue.pop_front() {
            if seen.insert(i) {
                order.push(i);
                queue.extend(self.parents[i].iter().copied());
            }
        }
        Ok(order)
    }

    /// `ancestor == descendant` or `ancestor` is a direct or indirect hypernym.
    pub fn is_hypernym_or_equal(
        &self,
        ancestor: &SynsetId,
        descendant: &SynsetId,
    ) -> Result<bool, TaxonomyError> {
        let target = self.index_of(ancestor)?;
        let start = self.index_of(descendant)?;
        if target == start {
            return Ok(true);
        }
        let mut seen = HashSet::new();
        let mut stack = self.parents[start].clone();
        while let Some(i) = stack.pop() {
            if i == target {
                return Ok(true);
            }
            if seen.insert(i) {
                stack.extend(self.parents[i].iter().copied());
            }
        }
        Ok(false)
    }

    fn index_of(&self, id: &SynsetId) -> Result<usize, TaxonomyError> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownSynset(id.clone()))
    }

    /// Canonical serialization: synsets sorted by id, then edges sorted.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        let mut order: Vec<usize> = (0..self.synsets.len()).collect();
        order.sort_by(|&a, &b| self.synsets[a].id.cmp(&self.synsets[b].id));
        for &i in &order {
            let s = &self.synsets[i];
            let lex: Vec<String> = s.lexemes.iter().map(|l| format!("{}:{}", l.lemma, l.sense)).collect();
            out.push_str(&format!("S\t{}\t{}", s.id, lex.join(",")));
            if let Some(g) = &s.gloss {
                out.push('\t');
                out.push_str(g);
            }
            out.push('\n');
        }
        let mut edges: Vec<(&SynsetId, &SynsetId)> = Vec::new();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                edges.push((&self.synsets[c].id, &self.synsets[p].id));
            }
        }
        edges.sort();
        for (c, p) in edges {
            out.push_str(&format!("H\t{c}\t{p}\n"));
        }
        out
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex_digest(self.to_canonical_string().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Incremental construction with the same validation as the file loader.
#[derive(Debug, Default)]
pub struct TaxonomyBuilder {
    synsets: Vec<Synset>,
    by_id: HashMap<SynsetId, usize>,
    lexemes: HashSet<(String, u32)>,
    edges: Vec<(usize, usize, usize)>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_synset(&mut self, synset: Synset) -> Result<&mut Self, TaxonomyError> {
        if synset.lexemes.is_empty() {
            return Err(TaxonomyError::Parse {
                line: 0,
                message: format!("synset `{}` has no lexemes", synset.id),
            });
        }
        if self.by_id.contains_key(&synset.id) {
            return Err(TaxonomyError::DuplicateSynset(synset.id));
        }
        for l in &synset.lexemes {
            if !self.lexemes.insert((l.lemma.clone(), l.sense)) {
                return Err(TaxonomyError::DuplicateLexeme {
                    lemma: l.lemma.clone(),
                    sense: l.sense,
                });
            }
        }
        self.by_id.insert(synset.id.clone(), self.synsets.len());
        self.synsets.push(synset);
        Ok(self)
    }

    /// Convenience for fixtures: `lexemes` as (lemma, sense) pairs.
    pub fn synset(&mut self, id: &str, lexemes: &[(&str, u32)]) -> Result<&mut Self, TaxonomyError> {
        self.add_synset(Synset {
            id: SynsetId::new(id),
            lexemes: lexemes
                .iter()
                .map(|&(lemma, sense)| Lexeme { lemma: lemma.to_string(), sense })
                .collect(),
            gloss: None,
        })
    }

    pub fn edge(&mut self, child: &str, parent: &str) -> Result<&mut Self, TaxonomyError> {
        self.add_edge_at(0, SynsetId::new(child), SynsetId::new(parent))?;
        Ok(self)
    }

    fn add_edge_at(&mut self, line: usize, child: SynsetId, parent: SynsetId) -> Result<(), TaxonomyError> {
        let c = *self
            .by_id
            .get(&child)
            .ok_or(TaxonomyError::UnknownEndpoint { line, id: child.clone() })?;
        let p = *self
            .by_id
            .get(&parent)
            .ok_or(TaxonomyError::UnknownEndpoint { line, id: parent.clone() })?;
        self.edges.push((line, c, p));
        Ok(())
    }

    pub fn build(&self) -> Result<TaxonomyGraph, TaxonomyError> {
        let n = self.synsets.len();
        let mut parents = vec![Vec::new(); n];
        for &(_, c, p) in &self.edges {
            if !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }
        for ps in &mut parents {
            ps.sort_by(|&a, &b| self.synsets[a].id.cmp(&self.synsets[b].id));
        }
        if let Some((c, p)) = find_cycle(&parents) {
            return Err(TaxonomyError::Cycle {
                child: self.synsets[c].id.clone(),
                parent: self.synsets[p].id.clone(),
            });
        }
        let mut lemma_index: HashMap<String, Vec<(u32, usize)>> = HashMap::new();
        for (i, s) in self.synsets.iter().enumerate() {
            for l in &s.lexemes {
                lemma_index.entry(l.lemma.clone()).or_default().push((l.sense, i));
            }
        }
        for v in lemma_index.values_mut() {
            v.sort();
        }
        Ok(TaxonomyGraph {
            synsets: self.synsets.clone(),
            by_id: self.by_id.clone(),
            parents,
            lemma_index,
        })
    }
}

/// Returns one back edge (child, parent) if the parent relation has a cycle.
fn find_cycle(parents: &[Vec<usize>]) -> Option<(usize, usize)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; parents.len()];
    for root in 0..parents.len() {
        if mark[root] != Mark::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Grey;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < parents[node].len() {
                let p = parents[node][*next];
                *next += 1;
                match mark[p] {
                    Mark::Grey => return Some((node, p)),
                    Mark::White => {
                        mark[p] = Mark::Grey;
                        stack.push((p, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
    }
    None
}
