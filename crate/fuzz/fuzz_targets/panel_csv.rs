#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ingested) = dymgnn::dataprep::ingest_panel(data) {
        // Whatever ingests must serialize and re-ingest to the same panel.
        let mut out = Vec::new();
        dymgnn::dataprep::write_panel(&ingested.panel, &mut out).unwrap();
        let again = dymgnn::dataprep::ingest_panel(out.as_slice()).unwrap();
        assert_eq!(again.panel, ingested.panel);
    }
});
