use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{EntityLibrary, LibraryError};
use crate::taxonomy::{SynsetId, TaxonomyGraph};

/// A manually annotated article: whether it describes an entity and, if so,
/// which synsets it should carry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GoldArticle {
    pub doc_id: String,
    pub present: bool,
    #[serde(default)]
    pub synsets: BTreeSet<SynsetId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QualityReport {
    pub entities_present: usize,
    pub entities_found: usize,
    pub gold_synsets: usize,
    pub library_synsets: usize,
    pub equal: usize,
    pub sense_only: usize,
    pub missing: usize,
    pub spurious: usize,
    pub per_entity_recall: Option<f64>,
    pub synset_precision: Option<f64>,
    pub synset_recall: Option<f64>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

fn same_lemma_other_sense(graph: &TaxonomyGraph, a: &SynsetId, b: &SynsetId) -> bool {
    let (Some(sa), Some(sb)) = (graph.synset(a), graph.synset(b)) else {
        return false;
    };
    sa.lexemes
        .iter()
        .any(|la| sb.lexemes.iter().any(|lb| la.lemma == lb.lemma && la.sense != lb.sense))
}

/// Compares library synsets with a gold sample. Synset precision counts exact
/// matches only; synset recall also credits sense-only mismatches.
pub fn library_quality(
    lib: &EntityLibrary,
    graph: &TaxonomyGraph,
    gold: &[GoldArticle],
    known_doc_ids: &HashSet<String>,
) -> Result<QualityReport, LibraryError> {
    let mut r = QualityReport::default();
    for g in gold {
        if !known_doc_ids.contains(&g.doc_id) {
            return Err(LibraryError::UnknownArticle(g.doc_id.clone()));
        }
        if !g.present {
            continue;
        }
        r.entities_present += 1;
        r.gold_synsets += g.synsets.len();
        let Some(entity) = lib.entities.iter().find(|e| e.source_doc_id == g.doc_id) else {
            r.missing += g.synsets.len();
            continue;
        };
        r.entities_found += 1;
        let found = &entity.synset_ids;
        r.library_synsets += found.len();
        let equal = found.intersection(&g.synsets).count();
        let mut extra: Vec<&SynsetId> = found.difference(&g.synsets).collect();
        let mut sense_only = 0;
        for want in g.synsets.difference(found) {
            if let Some(pos) = extra.iter().position(|s| same_lemma_other_sense(graph, s, want)) {
                extra.remove(pos);
                sense_only += 1;
            }
        }
        r.equal += equal;
        r.sense_only += sense_only;
        r.missing += g.synsets.len() - equal - sense_only;
        r.spurious += found.len() - equal - sense_only;
    }
    r.per_entity_recall = ratio(r.entities_found, r.entities_present);
    r.synset_precision = ratio(r.equal, r.library_synsets);
    r.synset_recall = ratio(r.equal + r.sense_only, r.gold_synsets);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity_library::Entity;
    use crate::taxonomy::TaxonomyBuilder;

    fn graph() -> TaxonomyGraph {
        let mut b = TaxonomyBuilder::new();
        b.synset("mayor", &[("president", 1), ("mayor", 1)]).unwrap();
        b.synset("president", &[("president", 2)]).unwrap();
        b.synset("king", &[("king", 1)]).unwrap();
        b.build().unwrap()
    }

    fn entity(id: u32, doc: &str, synsets: &[&str]) -> Entity {
        Entity {
            entity_id: id,
            main_name: format!("E{id}"),
            aliases: Default::default(),
            description_url: String::new(),
            source_doc_id: doc.into(),
            synset_ids: synsets.iter().map(|s| SynsetId::from(*s)).collect(),
        }
    }

    fn gold(doc: &str, synsets: &[&str]) -> GoldArticle {
        GoldArticle {
            doc_id: doc.into(),
            present: true,
            synsets: synsets.iter().map(|s| SynsetId::from(*s)).collect(),
        }
    }

    fn known(n: usize) -> HashSet<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn identical_gold_is_perfect() {
        let lib = EntityLibrary::new(vec![entity(0, "0", &["king"]), entity(1, "1", &["mayor"])]).unwrap();
        let g = vec![gold("0", &["king"]), gold("1", &["mayor"])];
        let r = library_quality(&lib, &graph(), &g, &known(2)).unwrap();
        assert_eq!((r.per_entity_recall, r.synset_precision, r.synset_recall), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn one_missing_entity_of_ten() {
        let lib = EntityLibrary::new((0..9).map(|i| entity(i, &i.to_string(), &["king"])).collect()).unwrap();
        let g: Vec<_> = (0..10).map(|i| gold(&i.to_string(), &["king"])).collect();
        let r = library_quality(&lib, &graph(), &g, &known(10)).unwrap();
        assert_eq!(r.per_entity_recall, Some(0.9));
    }

    #[test]
    fn sense_only_mismatch_counts_for_recall_not_precision() {
        let lib = EntityLibrary::new(vec![entity(0, "0", &["mayor"])]).unwrap();
        let r = library_quality(&lib, &graph(), &[gold("0", &["president"])], &known(1)).unwrap();
        assert_eq!((r.equal, r.sense_only, r.missing, r.spurious), (0, 1, 0, 0));
        assert_eq!(r.synset_precision, Some(0.0));
        assert_eq!(r.synset_recall, Some(1.0));
    }

    #[test]
    fn unknown_article_is_an_error() {
        let lib = EntityLibrary::default();
        assert!(library_quality(&lib, &graph(), &[gold("9", &[])], &known(1)).is_err());
    }
}
