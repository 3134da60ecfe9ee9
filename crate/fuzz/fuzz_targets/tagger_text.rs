#![no_main]

use deeper::tagger::LexiconTagger;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let doc = LexiconTagger::default().annotate_snippet("t", text);
    assert!(doc.validate().is_ok());
    // Markup spans drop their label, so only plain text keeps every character.
    // Pilcrows are left out on both sides since a standalone one is a break.
    if !text.contains("[[") {
        let kept: String = doc.segments.iter().flat_map(|s| s.surface.chars()).filter(|&c| c != '¶').collect();
        let visible: String = text.chars().filter(|&c| !c.is_whitespace() && c != '¶').collect();
        assert_eq!(kept, visible);
    }
});
