#![no_main]

use deeper::tagger::LexiconTagger;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(t) = LexiconTagger::parse(text) {
        let doc = t.annotate_snippet("f", "The famous writers were in Paris, 1912.");
        assert!(doc.validate().is_ok());
    }
});
