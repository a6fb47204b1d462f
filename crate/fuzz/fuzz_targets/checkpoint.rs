#![no_main]

use dymgnn::model::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cp) = Checkpoint::from_bytes(data) {
        assert_eq!(Checkpoint::from_bytes(&cp.to_bytes()).unwrap(), cp);
    }
});
