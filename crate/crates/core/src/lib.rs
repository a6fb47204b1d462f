//! Dynamic multilayer graph neural networks for node-level default prediction.

pub mod dataprep;
pub mod eval;
pub mod fsutil;
pub mod graph;
pub mod layers;
pub mod model;
pub mod seed;
pub mod tensor;
