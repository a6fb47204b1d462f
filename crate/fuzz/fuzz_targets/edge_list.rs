#![no_main]

use dymgnn::graph::io::parse_edge_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(edges) = parse_edge_list(text, n as usize) {
            assert!(edges.iter().all(|&(a, b)| a < n as usize && b < n as usize));
        }
    }
});
