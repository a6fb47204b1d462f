//! Multilayer snapshot networks: supra adjacency, normalization, node
//! isolation, and feature replication across layers.

pub mod io;
mod topology;

pub use topology::{
    build_supra_adjacency, isolate_nodes, isolation_sample, normalize_adjacency,
    replicate_features, validate_topology, MultilayerTopology, NormalizedAdjacency,
    SnapshotSequence, Violation,
};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("layer {layer}: edge ({a}, {b}) out of range for n = {n}")]
    EndpointOutOfRange {
        layer: usize,
        a: usize,
        b: usize,
        n: usize,
    },
    #[error("layer {layer}: self edge on node {node}")]
    SelfEdge { layer: usize, node: usize },
    #[error("a multilayer topology needs at least one layer")]
    NoLayers,
    #[error("declared {declared} layers but found {found}")]
    LayerCount { declared: usize, found: usize },
    #[error("snapshot sequence is empty")]
    EmptySequence,
    #[error("{snapshots} snapshots but {timestamps} timestamps")]
    TimestampCount { snapshots: usize, timestamps: usize },
    #[error("snapshot {snapshot}: features are {}x{}, expected {}x{}", .found.0, .found.1, .expected.0, .expected.1)]
    FeatureShape {
        snapshot: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("snapshot {snapshot}: non-finite feature value")]
    NonFiniteFeature { snapshot: usize },
    #[error("isolation fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GraphError {
    pub(crate) fn parse(line: usize, msg: &str) -> Self {
        GraphError::Parse {
            line,
            msg: msg.to_string(),
        }
    }
}
