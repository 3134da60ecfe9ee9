#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use deeper::answering::Pipeline;
use deeper::entity_library::{read_definition, DefinitionRules};
use deeper::resources::{ResourcePaths, Resources};
use deeper::tagger::LexiconTagger;
use deeper::taxonomy::{SynsetId, TaxonomyGraph};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures().join(name)
}

pub fn paths() -> ResourcePaths {
    ResourcePaths::in_dir(fixtures())
}

pub fn resources() -> Resources {
    Resources::load(&paths()).expect("fixture resources load")
}

pub fn pipeline() -> Pipeline {
    resources().build_pipeline()
}

pub fn lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(name))
        .expect("fixture readable")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub struct DefinitionCase {
    pub text: String,
    pub expected: BTreeSet<SynsetId>,
}

pub fn definition_cases() -> Vec<DefinitionCase> {
    lines("definitions.tsv")
        .iter()
        .map(|l| {
            let (expected, text) = l.split_once('\t').expect("expected<TAB>text");
            let expected = match expected {
                "-" => BTreeSet::new(),
                e => e.split(' ').map(SynsetId::from).collect(),
            };
            DefinitionCase {
                text: text.to_string(),
                expected,
            }
        })
        .collect()
}

/// Synsets read from the first paragraph of `text`.
pub fn read_text(tagger: &LexiconTagger, graph: &TaxonomyGraph, rules: &DefinitionRules, text: &str) -> BTreeSet<SynsetId> {
    let doc = tagger.annotate_snippet("def", text);
    let span = doc.first_paragraph().expect("non-empty paragraph");
    read_definition(&doc, span, graph, rules)
}

/// Pinned per-question outcome of the fixture gold set under the default
/// configuration: (id, answered, correct, rank, answer or refusal kind).
pub const PINNED_QA: [(&str, bool, bool, Option<usize>, &str); 20] = [
    ("q01", true, true, Some(1), "Arctic Tern"),
    ("q02", true, true, Some(1), "Kursk"),
    ("q03", true, true, Some(1), "Jan Sobieski"),
    ("q04", true, true, Some(1), "Chopin"),
    ("q05", true, true, Some(1), "Marie Curie"),
    ("q06", true, true, Some(1), "Vistula"),
    ("q07", true, true, Some(1), "Kraków"),
    ("q08", true, true, Some(1), "Mercury"),
    ("q09", true, true, Some(1), "Sicily"),
    ("q10", true, true, Some(1), "John Kennedy"),
    ("q11", true, true, Some(1), "Ferdinand Magellan"),
    ("q12", true, true, Some(1), "Mount Everest"),
    ("q13", true, true, Some(1), "Titanic"),
    ("q14", true, true, Some(1), "Sirius"),
    ("q15", false, false, None, "no-candidates"),
    ("q16", false, false, None, "unsupported-question-type"),
    ("q17", true, true, Some(1), "Adam Mickiewicz"),
    ("q18", true, true, Some(1), "Perun"),
    ("q19", true, true, Some(1), "Herring Gull"),
    ("q20", true, true, Some(1), "Lech Wałęsa"),
];
pub const PINNED_RECALL: f64 = 18.0 / 20.0;
pub const PINNED_PRECISION: f64 = 1.0; // 18 of 18 answered

/// Checks evaluation results against [`PINNED_QA`], listing every mismatch.
pub fn pinned_mismatches(results: &[deeper::evalkit::QuestionResult]) -> Vec<String> {
    let mut out = Vec::new();
    if results.len() != PINNED_QA.len() {
        out.push(format!("{} results, expected {}", results.len(), PINNED_QA.len()));
    }
    for (r, &(id, answered, correct, rank, text)) in results.iter().zip(PINNED_QA.iter()) {
        let shown = r.answer.as_deref().or(r.refusal.as_deref()).unwrap_or("");
        if r.id != id || r.verdict.answered != answered || r.verdict.correct != correct || r.verdict.rank != rank || shown != text {
            out.push(format!(
                "{}: answered={} correct={} rank={:?} {shown:?}; pinned {id} {answered} {correct} {rank:?} {text:?}",
                r.id, r.verdict.answered, r.verdict.correct, r.verdict.rank
            ));
        }
    }
    out
}

/// Brute-force reading of the fuzzy name rules: some common prefix of length
/// `p` leaves at most three characters on either side, fewer on the chunk
/// side than `p` itself.
pub fn name_rules_brute(chunk: &[char], key: &[char]) -> bool {
    (0..=chunk.len().min(key.len())).any(|p| {
        chunk[..p] == key[..p] && chunk.len() - p <= 3 && key.len() - p <= 3 && p > chunk.len() - p
    })
}

pub mod synth {
    use deeper::corpus::{AnnotatedDocument, GroupKind, PageKind, Segment, Span, SyntacticGroup, TagClass};
    use deeper::entity_library::{Entity, EntityLibrary};
    use rand::seq::IndexedRandom;
    use rand::Rng;

    const SYLLABLES: [&str; 8] = ["ka", "ro", "mi", "ta", "lu", "sen", "wa", "ko"];

    pub fn word(rng: &mut impl Rng) -> String {
        let n = rng.random_range(1..=3);
        let mut w: String = (0..n).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if rng.random_bool(0.3) {
            w.push(*['a', 'e', 'y', 'u'].choose(rng).expect("non-empty"));
        }
        if rng.random_bool(0.4) {
            let mut c = w.chars();
            let first = c.next().expect("non-empty").to_uppercase().collect::<String>();
            w = first + c.as_str();
        }
        w
    }

    /// A library of `names` distinct one- to three-word names spread over
    /// entities holding one to three names each.
    pub fn library(rng: &mut impl Rng, names: usize) -> EntityLibrary {
        let mut pool = std::collections::BTreeSet::new();
        while pool.len() < names {
            let k = rng.random_range(1..=3);
            pool.insert((0..k).map(|_| word(rng)).collect::<Vec<_>>().join(" "));
        }
        let mut pool: Vec<String> = pool.into_iter().collect();
        let mut entities = Vec::new();
        while !pool.is_empty() {
            let take = rng.random_range(1..=3).min(pool.len());
            let mut names: Vec<String> = pool.drain(..take).collect();
            let main = names.remove(0);
            let id = entities.len() as u32;
            entities.push(Entity {
                entity_id: id,
                main_name: main,
                aliases: names
                    .into_iter()
                    .map(|name| deeper::entity_library::Alias {
                        name,
                        origin: deeper::entity_library::AliasOrigin::Redirect,
                    })
                    .collect(),
                description_url: format!("doc:s{id}"),
                source_doc_id: format!("s{id}"),
                synset_ids: [deeper::taxonomy::SynsetId::from("entity")].into(),
            });
        }
        EntityLibrary::new(entities).expect("valid synthetic library")
    }

    /// A document of `len` segments drawn from library names, random words,
    /// punctuation and paragraph markers, with random nominal groups.
    pub fn document(rng: &mut impl Rng, lib: &EntityLibrary, len: usize) -> AnnotatedDocument {
        let names: Vec<&String> = lib.name_index().keys().collect();
        let mut segments: Vec<Segment> = Vec::with_capacity(len);
        let mut sentence = 0;
        while segments.len() < len {
            let roll: f64 = rng.random();
            let tokens: Vec<String> = if roll < 0.3 {
                let name = names.choose(rng).expect("non-empty library");
                let mut toks: Vec<String> = name.split(' ').map(str::to_string).collect();
                if rng.random_bool(0.5) {
                    let last = toks.last_mut().expect("non-empty name");
                    last.push_str(["a", "em", "owi", "ie"].choose(rng).expect("non-empty"));
                }
                toks
            } else if roll < 0.9 {
                vec![word(rng)]
            } else if roll < 0.97 {
                vec![[",", ".", "(", ")", "–"].choose(rng).expect("non-empty").to_string()]
            } else {
                vec![deeper::corpus::PARAGRAPH_SURFACE.to_string()]
            };
            for t in tokens {
                if segments.len() == len {
                    break;
                }
                let para = t == deeper::corpus::PARAGRAPH_SURFACE;
                let punct = !t.chars().any(char::is_alphanumeric);
                let lemma = if para || punct || rng.random_bool(0.7) {
                    t.clone()
                } else {
                    t.to_lowercase()
                };
                let cap = t.chars().next().is_some_and(char::is_uppercase);
                segments.push(Segment {
                    tag: if para { deeper::corpus::PARAGRAPH_TAG.into() } else if punct { "punct".into() } else { "noun".into() },
                    class: if para || punct { TagClass::Other } else { TagClass::Nominal },
                    surface: t,
                    lemma,
                    sentence,
                    cap,
                });
                if para {
                    sentence += 1;
                }
            }
        }
        let mut groups = Vec::new();
        for _ in 0..len / 20 {
            let start = rng.random_range(0..len);
            let end = (start + rng.random_range(2..=4)).min(len);
            let lemma = (start..end).map(|i| segments[i].lemma.as_str()).collect::<Vec<_>>().join(" ");
            groups.push(SyntacticGroup {
                span: Span::new(start, end),
                kind: GroupKind::Nominal,
                head: Span::new(end - 1, end),
                lemma: Some(lemma),
            });
        }
        AnnotatedDocument {
            doc_id: "synthetic".into(),
            title: String::new(),
            page_kind: PageKind::Article,
            redirect_target: None,
            title_lemmas: None,
            segments,
            groups,
            ne_annotations: None,
        }
    }
}
