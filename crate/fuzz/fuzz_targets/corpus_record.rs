#![no_main]

use deeper::corpus::parse_record;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|line: &str| {
    if let Ok(doc) = parse_record(line) {
        assert_eq!(parse_record(&doc.to_json_line()).unwrap(), doc);
    }
});
