#![no_main]

use libfuzzer_sys::fuzz_target;
use summgcn::graph::{parse_ntriples, write_ntriples, ParseOptions};

fuzz_target!(|data: &[u8]| {
    let Ok(g) = parse_ntriples(data, ParseOptions::default()) else { return };
    // whatever parses must survive a write/reparse round trip
    let mut out = Vec::new();
    write_ntriples(&g, &mut out).expect("in-memory write");
    let back = parse_ntriples(out.as_slice(), ParseOptions::default()).expect("reparse of written graph");
    assert_eq!(back.size(), g.size());
});
