#![no_main]

use deeper::evalkit::parse_gold;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_gold(text);
});
