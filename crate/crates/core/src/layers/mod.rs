//! Neural building blocks: graph encoders, recurrent cells, temporal
//! attention, and the decoder head.

mod attention;
mod decoder;
mod gnn;
mod params;
mod recurrent;

pub use attention::TemporalAttention;
pub use decoder::{Decoder, DECODER_HIDDEN};
pub use gnn::{AttentionEdges, GatLayer, GcnLayer, GraphContext};
pub use params::{BoundParams, ParameterStore};
pub use recurrent::{GruCell, LstmCell};

use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LayerError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("parameter {0} is not registered")]
    MissingParam(String),
    #[error("parameter {0} registered twice")]
    DuplicateParam(String),
    #[error("invalid layer configuration: {0}")]
    Config(String),
}
