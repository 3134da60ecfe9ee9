//! The entity library: entities harvested from encyclopedia definitions.
//!
//! Articles contribute one entity each when their first paragraph yields at
//! least one synset. Disambiguation items then either extend an existing
//! entity (matched by exact name) or add a new one. Redirects become aliases.

pub mod definition;
mod quality;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedDocument, PageKind, Span};
use crate::taxonomy::{hex_digest, SynsetId, TaxonomyGraph};
pub use definition::{extract_synsets, read_definition, Chunk, DefinitionRules};
pub use quality::{library_quality, GoldArticle, QualityReport};
pub use store::{LIBRARY_FORMAT, LIBRARY_VERSION};

pub type EntityId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AliasOrigin {
    Redirect,
    DisambiguationPage,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Alias {
    pub name: String,
    pub origin: AliasOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Entity {
    pub entity_id: EntityId,
    pub main_name: String,
    pub aliases: BTreeSet<Alias>,
    pub description_url: String,
    pub source_doc_id: String,
    pub synset_ids: BTreeSet<SynsetId>,
}

impl Entity {
    /// Main name followed by the distinct alias names.
    pub fn names(&self) -> Vec<&str> {
        let mut out = vec![self.main_name.as_str()];
        for a in &self.aliases {
            if !out.contains(&a.name.as_str()) {
                out.push(&a.name);
            }
        }
        out
    }

    fn add_alias(&mut self, name: &str, origin: AliasOrigin) -> bool {
        if name == self.main_name {
            return false;
        }
        self.aliases.insert(Alias {
            name: name.to_string(),
            origin,
        })
    }
}

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("library line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported library version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("library checksum mismatch: header {expected}, content {actual}")]
    Checksum { expected: String, actual: String },
    #[error("invalid library: {0}")]
    Invalid(String),
    #[error("gold record references unknown article {0}")]
    UnknownArticle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityLibrary {
    pub entities: Vec<Entity>,
    #[serde(skip)]
    name_index: BTreeMap<String, Vec<EntityId>>,
    pub corpus_digest: String,
    pub taxonomy_digest: String,
}

impl EntityLibrary {
    pub fn new(entities: Vec<Entity>) -> Result<Self, LibraryError> {
        let mut lib = EntityLibrary {
            entities,
            ..Default::default()
        };
        lib.validate()?;
        lib.reindex();
        Ok(lib)
    }

    fn reindex(&mut self) {
        let mut index: BTreeMap<String, Vec<EntityId>> = BTreeMap::new();
        for e in &self.entities {
            for n in e.names() {
                index.entry(n.to_string()).or_default().push(e.entity_id);
            }
        }
        self.name_index = index;
    }

    pub fn validate(&self) -> Result<(), LibraryError> {
        for (i, e) in self.entities.iter().enumerate() {
            if e.entity_id as usize != i {
                return Err(LibraryError::Invalid(format!("entity at position {i} has id {}", e.entity_id)));
            }
            if e.main_name.is_empty() {
                return Err(LibraryError::Invalid(format!("entity {i} has an empty name")));
            }
            if e.aliases.iter().any(|a| a.name == e.main_name) {
                return Err(LibraryError::Invalid(format!("entity {i} lists its main name as alias")));
            }
            if e.synset_ids.is_empty() {
                return Err(LibraryError::Invalid(format!("entity {i} has no synsets")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id as usize)
    }

    pub fn name_index(&self) -> &BTreeMap<String, Vec<EntityId>> {
        &self.name_index
    }

    pub fn lookup(&self, name: &str) -> &[EntityId] {
        self.name_index.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn alias_count(&self) -> usize {
        self.entities.iter().map(|e| e.aliases.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub rules: DefinitionRules,
    /// `{docId}` is replaced by the source document id.
    pub url_template: String,
}

impl BuildOptions {
    pub fn new(rules: DefinitionRules) -> Self {
        BuildOptions {
            rules,
            url_template: "doc:{docId}".into(),
        }
    }

    fn url(&self, doc_id: &str) -> String {
        self.url_template.replace("{docId}", doc_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenamedTitle {
    pub doc_id: String,
    pub title: String,
    pub renamed_to: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkippedRedirect {
    pub doc_id: String,
    pub name: String,
    pub target: String,
}

/// Build diagnostics written next to the library.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BuildReport {
    pub articles: usize,
    pub articles_without_pattern: usize,
    pub article_entities: usize,
    pub disambiguation_pages: usize,
    pub disambiguation_items: usize,
    pub items_matched: usize,
    pub items_created: usize,
    pub redirects: usize,
    pub redirect_aliases: usize,
    pub entities: usize,
    pub aliases: usize,
    pub names: usize,
    pub renamed_titles: Vec<RenamedTitle>,
    pub missing_redirect_targets: Vec<SkippedRedirect>,
}

pub fn corpus_digest<'a>(docs: impl IntoIterator<Item = &'a AnnotatedDocument>) -> String {
    let mut buf = Vec::new();
    for d in docs {
        buf.extend_from_slice(d.to_json_line().as_bytes());
        buf.push(b'\n');
    }
    hex_digest(&buf)
}

fn strip_qualifier(title: &str) -> &str {
    match title.rfind(" (") {
        Some(i) if title.ends_with(')') => &title[..i],
        _ => title,
    }
}

/// Builds the library from a corpus held in memory, in corpus order.
pub fn build_library(
    docs: &[AnnotatedDocument],
    graph: &TaxonomyGraph,
    options: &BuildOptions,
) -> (EntityLibrary, BuildReport) {
    let mut report = BuildReport::default();
    let rules = &options.rules;

    // Step 1: articles, interpreted in parallel and merged in corpus order.
    let readings: Vec<Option<Option<BTreeSet<SynsetId>>>> = docs
        .par_iter()
        .map(|d| {
            if d.page_kind != PageKind::Article {
                return None;
            }
            let span = d.first_paragraph().ok()?;
            Some(definition::interpret(d, span, graph, rules).map(|r| r.synsets))
        })
        .collect();

    let mut entities: Vec<Entity> = Vec::new();
    let mut by_main: BTreeMap<String, EntityId> = BTreeMap::new();
    for (d, reading) in docs.iter().zip(readings) {
        let Some(reading) = reading else { continue };
        report.articles += 1;
        let Some(synsets) = reading else {
            report.articles_without_pattern += 1;
            continue;
        };
        if synsets.is_empty() {
            continue;
        }
        let mut name = d.title.clone();
        let mut k = 2;
        while by_main.contains_key(&name) {
            name = format!("{} ({k})", d.title);
            k += 1;
        }
        if name != d.title {
            report.renamed_titles.push(RenamedTitle {
                doc_id: d.doc_id.clone(),
                title: d.title.clone(),
                renamed_to: name.clone(),
            });
        }
        let id = entities.len() as EntityId;
        by_main.insert(name.clone(), id);
        entities.push(Entity {
            entity_id: id,
            main_name: name,
            aliases: BTreeSet::new(),
            description_url: options.url(&d.doc_id),
            source_doc_id: d.doc_id.clone(),
            synset_ids: synsets,
        });
    }
    report.article_entities = entities.len();

    // Step 2: disambiguation items, one per paragraph.
    for d in docs.iter().filter(|d| d.page_kind == PageKind::Disambiguation) {
        report.disambiguation_pages += 1;
        let page_name = strip_qualifier(&d.title);
        for (n, para) in d.paragraphs().into_iter().enumerate() {
            let Some(reading) = definition::interpret(d, para, graph, rules) else {
                continue;
            };
            let item_name = d.text(Span::new(para.start, reading.pattern_at));
            if item_name.is_empty() {
                continue;
            }
            report.disambiguation_items += 1;
            let existing = by_main.get(&item_name).copied().or_else(|| {
                entities
                    .iter()
                    .find(|e| e.aliases.iter().any(|a| a.name == item_name))
                    .map(|e| e.entity_id)
            });
            match existing {
                Some(id) => {
                    report.items_matched += 1;
                    let e = &mut entities[id as usize];
                    e.synset_ids.extend(reading.synsets);
                    e.add_alias(page_name, AliasOrigin::DisambiguationPage);
                }
                None if !reading.synsets.is_empty() => {
                    report.items_created += 1;
                    let id = entities.len() as EntityId;
                    by_main.insert(item_name.clone(), id);
                    entities.push(Entity {
                        entity_id: id,
                        main_name: item_name,
                        aliases: BTreeSet::new(),
                        description_url: format!("{}#{}", options.url(&d.doc_id), n),
                        source_doc_id: d.doc_id.clone(),
                        synset_ids: reading.synsets,
                    });
                }
                None => {}
            }
        }
    }

    // Redirects resolve against every entity name known after both steps.
    for d in docs.iter().filter(|d| d.page_kind == PageKind::Redirect) {
        report.redirects += 1;
        let target = d.redirect_target.as_deref().unwrap_or_default();
        match by_main.get(target) {
            Some(&id) => {
                if entities[id as usize].add_alias(&d.title, AliasOrigin::Redirect) {
                    report.redirect_aliases += 1;
                }
            }
            None => report.missing_redirect_targets.push(SkippedRedirect {
                doc_id: d.doc_id.clone(),
                name: d.title.clone(),
                target: target.to_string(),
            }),
        }
    }

    let mut lib = EntityLibrary {
        entities,
        name_index: BTreeMap::new(),
        corpus_digest: corpus_digest(docs),
        taxonomy_digest: graph.digest(),
    };
    lib.reindex();
    report.entities = lib.len();
    report.aliases = lib.alias_count();
    report.names = lib.name_index.len();
    (lib, report)
}
