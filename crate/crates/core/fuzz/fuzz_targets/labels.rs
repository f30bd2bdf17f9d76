#![no_main]

use libfuzzer_sys::fuzz_target;
use summgcn::labels::read_labels;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // node vocabulary taken from the input itself so that lookups can hit
    let nodes: Vec<String> = text
        .lines()
        .filter_map(|l| l.split('\t').next())
        .map(str::to_string)
        .collect();
    if let Ok(m) = read_labels(text, &nodes, None) {
        assert_eq!(m.num_rows(), nodes.len());
    }
});
