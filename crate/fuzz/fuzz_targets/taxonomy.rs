#![no_main]

use deeper::taxonomy::TaxonomyGraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = TaxonomyGraph::from_reader(data) {
        // A graph that loaded must survive its own canonical form.
        let again = TaxonomyGraph::from_reader(g.to_canonical_string().as_bytes()).unwrap();
        assert_eq!(again.digest(), g.digest());
        for s in g.synsets() {
            let closure = g.hypernym_closure(&s.id).unwrap();
            assert!(!closure.contains(&s.id));
        }
    }
});
