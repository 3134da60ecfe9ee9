mod common;

use std::collections::{BTreeSet, HashSet};

use common::{fixture, resources};
use deeper::corpus::{read_corpus, CorpusManifest};
use deeper::entity_library::{build_library, library_quality, AliasOrigin, BuildOptions, EntityLibrary, GoldArticle};
use deeper::tagger::{parse_source, LexiconTagger};
use deeper::taxonomy::{SynsetId, TaxonomyGraph};

#[test]
fn corpus_file_regenerates_from_its_source() {
    let tagger = LexiconTagger::from_path(fixture("lexicon.tsv")).unwrap();
    let source = parse_source(&std::fs::read_to_string(fixture("corpus.src")).unwrap()).unwrap();
    let regenerated: String = tagger
        .annotate_source(&source)
        .iter()
        .map(|d| d.to_json_line() + "\n")
        .collect();
    let packaged = std::fs::read_to_string(fixture("corpus.jsonl")).unwrap();
    assert!(regenerated == packaged, "corpus.jsonl is stale; rerun `deeper annotate`");
}

#[test]
fn corpus_counts_match_manifest() {
    let docs = read_corpus(fixture("corpus.jsonl")).unwrap();
    let manifest = CorpusManifest::load(fixture("manifest.json")).unwrap();
    let counted = CorpusManifest::count(&docs);
    assert_eq!(counted.documents, 100);
    assert_eq!(
        (counted.documents, counted.article, counted.disambiguation, counted.redirect),
        (manifest.documents, manifest.article, manifest.disambiguation, manifest.redirect)
    );
    let ids: HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    assert_eq!(ids.len(), docs.len());
}

#[test]
fn toy_taxonomy_shape() {
    let toy = TaxonomyGraph::from_path(fixture("toy-tax.tsv")).unwrap();
    assert_eq!((toy.len(), toy.edge_count()), (12, 11));
    let closure = toy.hypernym_closure(&SynsetId::from("tern")).unwrap();
    let want: BTreeSet<SynsetId> = ["seabird", "bird", "entity"].into_iter().map(SynsetId::from).collect();
    assert_eq!(closure, want);
}

#[test]
fn world_taxonomy_extends_toy_taxonomy() {
    let toy = TaxonomyGraph::from_path(fixture("toy-tax.tsv")).unwrap();
    let world = TaxonomyGraph::from_path(fixture("world.tsv")).unwrap();
    let manifest = CorpusManifest::load(fixture("manifest.json")).unwrap();
    assert_eq!(world.len() as u64, manifest.extra["taxonomySynsets"].as_u64().unwrap());
    assert_eq!(world.edge_count() as u64, manifest.extra["taxonomyEdges"].as_u64().unwrap());
    for s in toy.synsets() {
        assert_eq!(world.synset(&s.id), Some(s));
        for p in toy.parents(&s.id).unwrap() {
            assert!(world.parents(&s.id).unwrap().contains(&p), "{} -> {p} missing", s.id);
        }
    }
}

#[test]
fn library_matches_manifest_and_survives_storage() {
    let res = resources();
    let (lib, report) = res.build_library();
    let manifest = CorpusManifest::load(fixture("manifest.json")).unwrap();
    assert_eq!(lib.len() as u64, manifest.extra["entities"].as_u64().unwrap());
    assert_eq!(lib.alias_count() as u64, manifest.extra["aliases"].as_u64().unwrap());
    assert_eq!(report.disambiguation_items as u64, manifest.extra["disambiguationItems"].as_u64().unwrap());
    assert!(report.missing_redirect_targets.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("library.json");
    lib.save(&path).unwrap();
    let loaded = EntityLibrary::load(&path).unwrap();
    assert_eq!(loaded, lib);
    assert_eq!(loaded.lookup("Sea Swallow"), lib.lookup("Arctic Tern"));
}

#[test]
fn disambiguation_and_redirect_aliases() {
    let (lib, _) = resources().build_library();
    let mercury = lib.entity(lib.lookup("Mercury")[0]).unwrap();
    assert_eq!(mercury.main_name, "Mercury (planet)");
    assert!(mercury.aliases.iter().any(|a| a.name == "Mercury" && a.origin == AliasOrigin::DisambiguationPage));

    let quicksilver = lib.entity(lib.lookup("Hydrargyrum")[0]).unwrap();
    assert_eq!(quicksilver.main_name, "Quicksilver");
    assert_eq!(quicksilver.source_doc_id, "d041");
    assert!(quicksilver.synset_ids.contains(&SynsetId::from("chemical_element")));

    let zeus = lib.entity(lib.lookup("Zeus")[0]).unwrap();
    assert!(zeus.aliases.is_empty());
}

#[test]
fn library_quality_on_annotated_sample() {
    let res = resources();
    let (lib, _) = res.build_library();
    let gold: Vec<GoldArticle> = common::lines("library-quality.jsonl")
        .iter()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let known: HashSet<String> = res.docs.iter().map(|d| d.doc_id.clone()).collect();
    let q = library_quality(&lib, &res.graph, &gold, &known).unwrap();
    assert_eq!((q.entities_present, q.entities_found), (14, 12));
    assert_eq!((q.gold_synsets, q.library_synsets), (17, 15));
    assert_eq!((q.equal, q.sense_only, q.missing, q.spurious), (12, 0, 5, 3));
    assert_eq!(q.per_entity_recall, Some(12.0 / 14.0));
    assert_eq!(q.synset_precision, Some(12.0 / 15.0));
    assert_eq!(q.synset_recall, Some(12.0 / 17.0));
}

#[test]
fn empty_corpus_builds_an_empty_library() {
    let res = resources();
    let (lib, report) = build_library(&[], &res.graph, &BuildOptions::new(res.rules.clone()));
    assert!(lib.is_empty());
    assert_eq!(report.entities, 0);
}
