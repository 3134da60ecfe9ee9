#![no_main]

use deeper::tagger::{parse_source, LexiconTagger};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(records) = parse_source(text) {
        for doc in LexiconTagger::default().annotate_source(&records) {
            assert!(doc.validate().is_ok(), "{}", doc.doc_id);
        }
    }
});
