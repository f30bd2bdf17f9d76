#![no_main]

use libfuzzer_sys::fuzz_target;
use summgcn::summary::read_mapping;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_mapping(text);
    }
});
