//! DYMGNN configurations, baselines, training, and checkpoints.

mod checkpoint;
mod config;
mod network;
mod train;

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{Architecture, ModelConfig, Pooling, Temporal, Topological};
pub use network::{
    flatten_window, replica_pool, static_features, LabeledWindow, Model, Prediction, PreparedWindow,
};
pub use train::{train, EarlyStopper, EpochRecord, StopReason, TrainConfig, TrainingRun};

pub use crate::layers::ParameterStore;

use crate::layers::LayerError;
use crate::tensor::TensorError;

/// Mean binary cross-entropy with predictions clamped to `[1e-7, 1 − 1e-7]`.
pub fn bce_loss(labels: &[f64], predictions: &[f64]) -> Result<f64, ModelError> {
    if labels.len() != predictions.len() {
        return Err(ModelError::Dimension(format!(
            "{} labels, {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    Ok(crate::tensor::bce_value(predictions, labels))
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no training windows")]
    EmptyTraining,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite loss at epoch {epoch}, window {window}")]
    NonFiniteLoss { epoch: usize, window: usize },
}
