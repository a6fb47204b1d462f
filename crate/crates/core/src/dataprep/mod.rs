//! Loan panels: ingest, cleaning and scaling, connector layers, rolling
//! windows, synthetic generation, and window storage.

mod features;
mod panel;
mod store;
mod synth;
mod windows;

pub use features::{median, percentile, FeatureSpec, FeatureStats, LOWER_CAP, UPPER_CAP};
pub use panel::{
    behavioural_indices, feature_index, header, ingest_panel, is_binary, write_panel, Ingested,
    LoanPanel, LoanRecord, Period, Reject, BEHAVIOURAL, FEATURE_NAMES,
};
pub use store::{
    list_windows, parse_labels, parse_meta, parse_window_features, read_feature_spec, read_window,
    render_manifest, window_dir, write_dataset, WindowMeta, FEATURES_FILE, LABELS_FILE,
    MANIFEST_FILE, META_FILE, SPEC_FILE,
};
pub use synth::{synth_generate, SynthSpec};
pub use windows::{
    area_key, build_windows, clique_edges, company_key, derive_connectors, horizon_label,
    BuiltWindow, Connectors, LayerSelection, WindowDataset, WindowOptions,
};

use crate::graph::GraphError;
use crate::model::ModelError;
use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("missing mandatory column {0}")]
    MissingColumn(String),
    #[error("duplicate record for loan {loan} in {period}")]
    Duplicate { loan: String, period: String },
    #[error("invalid period {0:?} (expected YYYY-MM)")]
    Period(String),
    #[error("feature {0} has no observed values in the training periods")]
    AllMissing(String),
    #[error("{0}")]
    Schema(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl From<std::io::Error> for DataError {
    fn from(e: std::io::Error) -> Self {
        DataError::Io(e.to_string())
    }
}
