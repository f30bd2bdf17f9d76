#![no_main]

use libfuzzer_sys::fuzz_target;
use summgcn::rgcn::RgcnModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = RgcnModel::decode(data) {
        let bytes = model.encode().expect("decoded model re-encodes");
        assert_eq!(bytes, data);
    }
});
