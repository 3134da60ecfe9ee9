#![no_main]

use deeper::retrieval::Index;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = Index::from_bytes(data) {
        assert_eq!(Index::from_bytes(&index.to_bytes()).unwrap(), index);
    }
});
