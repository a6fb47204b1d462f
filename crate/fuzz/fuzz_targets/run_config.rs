#![no_main]

use dymgnn_cli::config::{RunConfig, SECTIONS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for section in SECTIONS {
            let mut cfg = RunConfig::new(section).unwrap();
            if cfg.apply_file_text(text).is_ok() {
                let mut again = RunConfig::new(section).unwrap();
                again.apply_file_text(&cfg.render()).unwrap();
                assert_eq!(again, cfg);
            }
            let _ = RunConfig::new(section).unwrap().apply_override(text);
        }
    }
});
