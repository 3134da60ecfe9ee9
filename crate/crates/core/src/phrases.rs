//! Token-sequence phrase lists, matched case-insensitively against segment
//! surfaces. Used for definition patterns and the shared prefix lexicon.

use std::path::Path;

use crate::corpus::Segment;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseList {
    phrases: Vec<Vec<String>>,
}

impl PhraseList {
    pub fn new<S: AsRef<str>>(phrases: impl IntoIterator<Item = S>) -> Self {
        let phrases = phrases
            .into_iter()
            .map(|p| p.as_ref().split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
            .filter(|p| !p.is_empty())
            .collect();
        PhraseList { phrases }
    }

    /// One phrase per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_path(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> &[Vec<String>] {
        &self.phrases
    }

    /// Length of the longest phrase matching at `pos` of the index sequence.
    pub fn longest_at(&self, segs: &[Segment], idx: &[usize], pos: usize) -> Option<usize> {
        self.phrases
            .iter()
            .filter(|p| phrase_at(p, segs, idx, pos))
            .map(Vec::len)
            .max()
    }

    /// Earliest position where any phrase matches; at equal positions the
    /// longest phrase wins. Returns `(position, length)`.
    pub fn find_first(&self, segs: &[Segment], idx: &[usize]) -> Option<(usize, usize)> {
        (0..idx.len()).find_map(|pos| self.longest_at(segs, idx, pos).map(|len| (pos, len)))
    }

    /// Repeatedly removes leading phrases; returns the number of positions skipped.
    pub fn strip_leading(&self, segs: &[Segment], idx: &[usize]) -> usize {
        let mut pos = 0;
        while let Some(len) = self.longest_at(segs, idx, pos) {
            pos += len;
        }
        pos
    }
}

fn phrase_at(phrase: &[String], segs: &[Segment], idx: &[usize], pos: usize) -> bool {
    pos + phrase.len() <= idx.len()
        && phrase
            .iter()
            .zip(&idx[pos..])
            .all(|(p, &i)| segs[i].surface.to_lowercase() == *p)
}
