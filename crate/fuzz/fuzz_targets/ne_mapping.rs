#![no_main]

use deeper::ner_adapter::NeTypeMapping;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = NeTypeMapping::parse(text);
});
