#![no_main]

use dymgnn::dataprep::parse_labels;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let ids: Vec<String> = ["L000000", "L000001", "L000002"].iter().map(|s| s.to_string()).collect();
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(labels) = parse_labels(text, &ids) {
            assert_eq!(labels.len(), ids.len());
        }
    }
});
