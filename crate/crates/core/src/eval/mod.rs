//! Metrics, bootstrap intervals, attention profiles, and Shapley attribution.

mod attention;
mod bootstrap;
mod dependency;
mod metrics;
mod report;
mod shapley;

pub use attention::{attention_profile, AttentionProfile};
pub use bootstrap::{bootstrap_ci, Interval, DEFAULT_RESAMPLES};
pub use dependency::{companion_feature, dependency_export, pearson, DependencyRow};
pub use metrics::{auc, f1};
pub use report::{evaluate, EvaluationReport, DEFAULT_THRESHOLD};
pub use shapley::{
    exact_shapley, sampled_shapley, shapley_attribution, AttributionTable, EXACT_MAX_FEATURES,
};

use crate::model::ModelError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{scores} scores but {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("labels must be 0 or 1")]
    NonBinaryLabel,
    #[error("scores contain non-finite values")]
    NonFinite,
    #[error("need at least 2 observations, got {0}")]
    TooFew(usize),
    #[error("sample count must be positive")]
    NoSamples,
    #[error("unsupported feature count or index {0}")]
    FeatureCount(usize),
    #[error("checkpoint has no temporal attention")]
    NoAttention,
    #[error("model error: {0}")]
    Model(String),
}

impl From<ModelError> for EvalError {
    fn from(e: ModelError) -> Self {
        EvalError::Model(e.to_string())
    }
}
