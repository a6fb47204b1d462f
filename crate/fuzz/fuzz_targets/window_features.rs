#![no_main]

use dymgnn::dataprep::{parse_window_features, Period};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let periods: Vec<Period> = (0..3).map(|m| Period::new(2012, 1 + m).unwrap()).collect();
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((ids, mats)) = parse_window_features(text, &periods) {
            assert_eq!(mats.len(), periods.len());
            assert!(mats.iter().all(|m| m.rows() == ids.len()));
        }
    }
});
