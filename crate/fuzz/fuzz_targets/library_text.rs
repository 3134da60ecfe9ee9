#![no_main]

use deeper::entity_library::EntityLibrary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(lib) = EntityLibrary::from_text(text) {
        assert_eq!(EntityLibrary::from_text(&lib.to_text()).unwrap(), lib);
    }
});
