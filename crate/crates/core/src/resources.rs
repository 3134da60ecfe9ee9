//! Locating and loading the data files a pipeline is assembled from.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answering::{Pipeline, PipelineParts};
use crate::corpus::{read_corpus, AnnotatedDocument};
use crate::entity_library::{build_library, BuildOptions, BuildReport, DefinitionRules, EntityLibrary};
use crate::ner_adapter::{NeTypeMapping, NumeralLexicon};
use crate::phrases::PhraseList;
use crate::question::QuestionAnalyzer;
use crate::retrieval::Index;
use crate::tagger::LexiconTagger;
use crate::taxonomy::{SynsetId, TaxonomyGraph};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("{}: file not found", .0.display())]
    Missing(PathBuf),
    #[error("{}: {message}", path.display())]
    Load { path: PathBuf, message: String },
    #[error("unit synset {0:?} is not in the taxonomy")]
    UnknownUnitSynset(String),
}

fn load_err(path: &Path, e: impl ToString) -> ResourceError {
    ResourceError::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ResourcePaths {
    pub taxonomy: PathBuf,
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub definition_patterns: PathBuf,
    pub prefixes: PathBuf,
    pub question_patterns: PathBuf,
    pub openings: PathBuf,
    pub synset_ne: PathBuf,
    pub ne_mapping: PathBuf,
    pub numerals: PathBuf,
    /// Synset whose hyponyms count as units of measurement.
    #[serde(default)]
    pub unit_synset: Option<String>,
}

impl ResourcePaths {
    /// The file layout of the packaged toy data set rooted at `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        ResourcePaths {
            taxonomy: d.join("world.tsv"),
            corpus: d.join("corpus.jsonl"),
            lexicon: d.join("lexicon.tsv"),
            definition_patterns: d.join("definition-patterns.txt"),
            prefixes: d.join("prefixes.txt"),
            question_patterns: d.join("question-patterns.tsv"),
            openings: d.join("openings.txt"),
            synset_ne: d.join("synset-ne.tsv"),
            ne_mapping: d.join("ne-mapping.tsv"),
            numerals: d.join("numerals.tsv"),
            unit_synset: Some("unit_of_measurement".into()),
        }
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        for p in self.paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    fn paths_mut(&mut self) -> [&mut PathBuf; 10] {
        [
            &mut self.taxonomy,
            &mut self.corpus,
            &mut self.lexicon,
            &mut self.definition_patterns,
            &mut self.prefixes,
            &mut self.question_patterns,
            &mut self.openings,
            &mut self.synset_ne,
            &mut self.ne_mapping,
            &mut self.numerals,
        ]
    }

    /// The first path that does not exist, if any.
    pub fn check_exist(&self) -> Result<(), ResourceError> {
        let mut copy = self.clone();
        let missing = copy.paths_mut().into_iter().find(|p| !p.exists()).cloned();
        missing.map_or(Ok(()), |p| Err(ResourceError::Missing(p)))
    }

    pub fn taxonomy(&self) -> Result<TaxonomyGraph, ResourceError> {
        exists(&self.taxonomy)?;
        TaxonomyGraph::from_path(&self.taxonomy).map_err(|e| load_err(&self.taxonomy, e))
    }

    pub fn corpus(&self) -> Result<Vec<AnnotatedDocument>, ResourceError> {
        exists(&self.corpus)?;
        read_corpus(&self.corpus).map_err(|e| load_err(&self.corpus, e))
    }

    pub fn tagger(&self) -> Result<LexiconTagger, ResourceError> {
        exists(&self.lexicon)?;
        LexiconTagger::from_path(&self.lexicon).map_err(|e| load_err(&self.lexicon, e))
    }

    pub fn definition_rules(&self) -> Result<DefinitionRules, ResourceError> {
        Ok(DefinitionRules {
            patterns: phrases(&self.definition_patterns)?,
            prefixes: phrases(&self.prefixes)?,
        })
    }

    pub fn analyzer(&self) -> Result<QuestionAnalyzer, ResourceError> {
        for p in [&self.question_patterns, &self.openings, &self.synset_ne] {
            exists(p)?;
        }
        QuestionAnalyzer::load(&self.question_patterns, &self.openings, &self.synset_ne)
            .map_err(|e| load_err(&self.question_patterns, e))
    }

    pub fn ne_mapping(&self) -> Result<NeTypeMapping, ResourceError> {
        exists(&self.ne_mapping)?;
        NeTypeMapping::from_path(&self.ne_mapping).map_err(|e| load_err(&self.ne_mapping, e))
    }

    pub fn numerals(&self) -> Result<NumeralLexicon, ResourceError> {
        exists(&self.numerals)?;
        NumeralLexicon::from_path(&self.numerals).map_err(|e| load_err(&self.numerals, e))
    }
}

fn exists(p: &Path) -> Result<(), ResourceError> {
    if p.exists() {
        Ok(())
    } else {
        Err(ResourceError::Missing(p.to_path_buf()))
    }
}

fn phrases(p: &Path) -> Result<PhraseList, ResourceError> {
    exists(p)?;
    PhraseList::from_path(p).map_err(|e| load_err(p, e))
}

/// Everything loaded from [`ResourcePaths`] except the library and index,
/// which are either built here or read from their own files.
pub struct Resources {
    pub graph: TaxonomyGraph,
    pub docs: Vec<AnnotatedDocument>,
    pub rules: DefinitionRules,
    pub tagger: LexiconTagger,
    pub analyzer: QuestionAnalyzer,
    pub mapping: NeTypeMapping,
    pub numerals: NumeralLexicon,
    pub unit_synset: Option<SynsetId>,
}

impl Resources {
    pub fn load(paths: &ResourcePaths) -> Result<Self, ResourceError> {
        let graph = paths.taxonomy()?;
        let unit_synset = match &paths.unit_synset {
            Some(u) if !graph.contains(&SynsetId::from(u.as_str())) => {
                return Err(ResourceError::UnknownUnitSynset(u.clone()))
            }
            u => u.as_deref().map(SynsetId::from),
        };
        Ok(Resources {
            docs: paths.corpus()?,
            rules: paths.definition_rules()?,
            tagger: paths.tagger()?,
            analyzer: paths.analyzer()?,
            mapping: paths.ne_mapping()?,
            numerals: paths.numerals()?,
            unit_synset,
            graph,
        })
    }

    pub fn build_library(&self) -> (EntityLibrary, BuildReport) {
        build_library(&self.docs, &self.graph, &BuildOptions::new(self.rules.clone()))
    }

    pub fn build_index(&self) -> Index {
        Index::build(&self.docs)
    }

    pub fn into_pipeline(self, lib: EntityLibrary, index: Index) -> Pipeline {
        Pipeline::new(PipelineParts {
            graph: self.graph,
            lib,
            index,
            docs: self.docs,
            analyzer: self.analyzer,
            mapping: self.mapping,
            numerals: self.numerals,
            unit_synset: self.unit_synset,
            tagger: self.tagger,
        })
    }

    /// Builds the library and index in memory and assembles a pipeline.
    pub fn build_pipeline(self) -> Pipeline {
        let (lib, _) = self.build_library();
        let index = self.build_index();
        self.into_pipeline(lib, index)
    }
}
