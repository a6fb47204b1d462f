#![no_main]

use dymgnn::graph::io::GraphHeader;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(h) = GraphHeader::parse(text) {
            assert_eq!(GraphHeader::parse(&h.render()).unwrap(), h);
        }
    }
});
