#![no_main]

use deeper::question::parse_synset_ne_table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_synset_ne_table(text);
});
