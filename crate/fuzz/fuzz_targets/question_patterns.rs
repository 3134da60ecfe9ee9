#![no_main]

use deeper::question::parse_patterns;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_patterns(text);
});
