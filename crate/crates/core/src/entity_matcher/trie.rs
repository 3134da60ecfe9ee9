//! A PATRICIA (radix) trie over characters mapping names to entity ids.

use crate::entity_library::EntityId;

#[derive(Debug, Clone, Default)]
struct Node {
    label: Vec<char>,
    children: Vec<usize>,
    values: Vec<EntityId>,
    terminal: bool,
}

#[derive(Debug, Clone)]
pub struct EntityTrie {
    nodes: Vec<Node>,
    keys: usize,
}

impl Default for EntityTrie {
    fn default() -> Self {
        EntityTrie {
            nodes: vec![Node::default()],
            keys: 0,
        }
    }
}

fn common_prefix(a: &[char], b: &[char]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// True iff the chunk and the key share a prefix of length `p` such that
/// neither unmatched suffix exceeds three characters and `p` exceeds the
/// chunk's unmatched suffix.
pub fn name_matches(chunk: &str, key: &str) -> bool {
    let (mut c, mut k) = (chunk.chars(), key.chars());
    let mut p = 0;
    let (cs, ks) = loop {
        match (c.next(), k.next()) {
            (Some(x), Some(y)) if x == y => p += 1,
            (None, None) => break (0, 0),
            (None, Some(_)) => break (0, 1 + k.count()),
            (Some(_), None) => break (1 + c.count(), 0),
            (Some(_), Some(_)) => break (1 + c.count(), 1 + k.count()),
        }
    };
    cs <= 3 && ks <= 3 && p > cs
}

/// Smallest common prefix length a key must share with a chunk of `len` chars.
fn min_prefix(len: usize) -> usize {
    (len.saturating_sub(3)).max(len / 2 + 1)
}

impl EntityTrie {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys
    }

    pub fn is_empty(&self) -> bool {
        self.keys == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn insert(&mut self, key: &str, id: EntityId) {
        let key: Vec<char> = key.chars().collect();
        let mut node = 0;
        let mut rest: &[char] = &key;
        loop {
            if rest.is_empty() {
                let n = &mut self.nodes[node];
                if !n.terminal {
                    n.terminal = true;
                    self.keys += 1;
                }
                if !n.values.contains(&id) {
                    n.values.push(id);
                }
                return;
            }
            let found = self.nodes[node]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].label[0] == rest[0]);
            let Some(child) = found else {
                let leaf = self.nodes.len();
                self.nodes.push(Node {
                    label: rest.to_vec(),
                    children: Vec::new(),
                    values: vec![id],
                    terminal: true,
                });
                self.nodes[node].children.push(leaf);
                self.keys += 1;
                return;
            };
            let m = common_prefix(&self.nodes[child].label, rest);
            if m < self.nodes[child].label.len() {
                // split the edge at m
                let tail = self.nodes[child].label.split_off(m);
                let moved = Node {
                    label: tail,
                    children: std::mem::take(&mut self.nodes[child].children),
                    values: std::mem::take(&mut self.nodes[child].values),
                    terminal: std::mem::replace(&mut self.nodes[child].terminal, false),
                };
                let idx = self.nodes.len();
                self.nodes.push(moved);
                self.nodes[child].children.push(idx);
            }
            node = child;
            rest = &rest[m..];
        }
    }

    pub fn get(&self, key: &str) -> Option<&[EntityId]> {
        let key: Vec<char> = key.chars().collect();
        let mut node = 0;
        let mut rest: &[char] = &key;
        while !rest.is_empty() {
            let child = self.nodes[node]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].label[0] == rest[0])?;
            let label = &self.nodes[child].label;
            if rest.len() < label.len() || rest[..label.len()] != label[..] {
                return None;
            }
            rest = &rest[label.len()..];
            node = child;
        }
        let n = &self.nodes[node];
        n.terminal.then_some(n.values.as_slice())
    }

    /// All keys in lexicographic (char) order with their ids.
    pub fn entries(&self) -> Vec<(String, &[EntityId])> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.collect(0, &mut prefix, usize::MAX, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn collect<'a>(&'a self, node: usize, prefix: &mut Vec<char>, limit: usize, out: &mut Vec<(String, &'a [EntityId])>) {
        let n = &self.nodes[node];
        let before = prefix.len();
        prefix.extend_from_slice(&n.label);
        if prefix.len() <= limit {
            if n.terminal {
                out.push((prefix.iter().collect(), n.values.as_slice()));
            }
            for &c in &n.children {
                self.collect(c, prefix, limit, out);
            }
        }
        prefix.truncate(before);
    }

    /// Every key satisfying [`name_matches`] against `chunk`.
    pub fn fuzzy_lookup(&self, chunk: &str) -> Vec<(String, &[EntityId])> {
        let c: Vec<char> = chunk.chars().collect();
        let mut out = Vec::new();
        if c.is_empty() {
            return out;
        }
        let pmin = min_prefix(c.len());
        let mut prefix = Vec::new();
        for &child in &self.nodes[0].children {
            self.fuzzy(child, &c, pmin, &mut prefix, &mut out);
        }
        out
    }

    fn fuzzy<'a>(
        &'a self,
        node: usize,
        chunk: &[char],
        pmin: usize,
        prefix: &mut Vec<char>,
        out: &mut Vec<(String, &'a [EntityId])>,
    ) {
        let depth = prefix.len();
        let n = &self.nodes[node];
        let m = common_prefix(&n.label, &chunk[depth..]);
        if m < n.label.len() {
            // every key below shares exactly depth + m characters with the chunk
            let p = depth + m;
            if p >= pmin {
                self.collect(node, prefix, p + 3, out);
            }
            return;
        }
        prefix.extend_from_slice(&n.label);
        let d = prefix.len();
        if n.terminal && d >= pmin {
            out.push((prefix.iter().collect(), n.values.as_slice()));
        }
        if d == chunk.len() {
            for &child in &n.children {
                self.collect(child, prefix, d + 3, out);
            }
        } else {
            for &child in &n.children {
                self.fuzzy(child, chunk, pmin, prefix, out);
            }
        }
        prefix.truncate(depth);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        assert!(name_matches("Komorowskiego", "Komorowski"));
        assert!(name_matches("x", "x"));
        assert!(!name_matches("kot", "kotlina"));
        assert!(!name_matches("", ""));
    }

    #[test]
    fn asymmetric_third_rule() {
        // p = 2, chunk suffix 2: fails; swapped, chunk suffix 0: holds
        assert!(!name_matches("abcd", "ab"));
        assert!(name_matches("ab", "abcd"));
    }

    #[test]
    fn prefix_sharing_storage() {
        let mut t = EntityTrie::new();
        t.insert("abc", 1);
        t.insert("ab", 0);
        t.insert("abd", 2);
        assert_eq!(t.get("ab"), Some(&[0][..]));
        assert_eq!(t.get("abc"), Some(&[1][..]));
        assert_eq!(t.get("a"), None);
        assert_eq!(t.len(), 3);
        // root, "ab", "c", "d"
        assert_eq!(t.node_count(), 4);
    }

    #[test]
    fn same_key_collects_ids() {
        let mut t = EntityTrie::new();
        for id in [3, 1, 3, 2] {
            t.insert("kot", id);
        }
        assert_eq!(t.get("kot"), Some(&[3, 1, 2][..]));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn fuzzy_lookup_matches_rules() {
        let mut t = EntityTrie::new();
        for (i, k) in ["Komorowski", "Komorowska", "Kom", "Kot", "Komorowskiego"].iter().enumerate() {
            t.insert(k, i as EntityId);
        }
        let mut got: Vec<String> = t.fuzzy_lookup("Komorowskiego").into_iter().map(|(k, _)| k).collect();
        got.sort();
        assert_eq!(got, vec!["Komorowski", "Komorowskiego"]);
        assert!(t.fuzzy_lookup("").is_empty());
    }
}
