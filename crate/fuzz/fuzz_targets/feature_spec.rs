#![no_main]

use dymgnn::dataprep::FeatureSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = FeatureSpec::parse(text) {
            assert_eq!(FeatureSpec::parse(&spec.render()).unwrap(), spec);
        }
    }
});
