#![no_main]

use deeper::ner_adapter::{parse_number, NumeralLexicon};
use deeper::tagger::LexiconTagger;
use libfuzzer_sys::fuzz_target;

// Input is `table NUL phrase`.
fuzz_target!(|text: &str| {
    let (table, phrase) = text.split_once('\0').unwrap_or((text, "twenty one"));
    if let Ok(lexicon) = NumeralLexicon::parse(table) {
        let doc = LexiconTagger::default().annotate_snippet("n", phrase);
        if let Some(v) = parse_number(&doc, &lexicon) {
            assert!(!v.is_nan());
        }
    }
});
