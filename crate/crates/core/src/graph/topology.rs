use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GraphError;
use crate::tensor::{DenseMatrix, SparseMatrix};

/// `n` nodes replicated over `l` layers, with per-layer undirected edges and the
/// `nl × nl` supra adjacency. Replica of node `i` in layer `k` (0-based) sits at
/// supra index `k * n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilayerTopology {
    n: usize,
    layer_names: Vec<String>,
    intra_edges: Vec<Vec<(usize, usize)>>,
    supra: SparseMatrix,
}

fn canonical_edges(
    edges: &[(usize, usize)],
    n: usize,
    layer: usize,
) -> Result<Vec<(usize, usize)>, GraphError> {
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(GraphError::EndpointOutOfRange { layer, a, b, n });
        }
        if a == b {
            return Err(GraphError::SelfEdge { layer, node: a });
        }
        set.insert((a.min(b), a.max(b)));
    }
    Ok(set.into_iter().collect())
}

/// Builds the topology from per-layer edge lists. Duplicate and reversed edges
/// collapse; replicas of each node are coupled across every pair of layers.
pub fn build_supra_adjacency(
    intra_edges: &[Vec<(usize, usize)>],
    n: usize,
) -> Result<MultilayerTopology, GraphError> {
    let names = (0..intra_edges.len())
        .map(|k| format!("layer{k}"))
        .collect();
    MultilayerTopology::new(n, names, intra_edges)
}

impl MultilayerTopology {
    pub fn new(
        n: usize,
        layer_names: Vec<String>,
        intra_edges: &[Vec<(usize, usize)>],
    ) -> Result<Self, GraphError> {
        let l = intra_edges.len();
        if l == 0 {
            return Err(GraphError::NoLayers);
        }
        if layer_names.len() != l {
            return Err(GraphError::LayerCount {
                declared: layer_names.len(),
                found: l,
            });
        }
        let mut canon = Vec::with_capacity(l);
        for (k, edges) in intra_edges.iter().enumerate() {
            canon.push(canonical_edges(edges, n, k)?);
        }
        let mut entries = Vec::new();
        for (k, edges) in canon.iter().enumerate() {
            let off = k * n;
            for &(a, b) in edges {
                entries.push((off + a, off + b));
                entries.push((off + b, off + a));
            }
        }
        for k in 0..l {
            for m in 0..l {
                if k != m {
                    entries.extend((0..n).map(|i| (k * n + i, m * n + i)));
                }
            }
        }
        entries.sort_unstable();
        let supra = SparseMatrix::from_raw_parts(n * l, n * l, entries, None, true);
        Ok(Self {
            n,
            layer_names,
            intra_edges: canon,
            supra,
        })
    }

    /// Assembles a topology without any checks. Only useful for exercising
    /// [`validate_topology`] against deliberately broken matrices.
    pub fn from_parts_unchecked(
        n: usize,
        layer_names: Vec<String>,
        intra_edges: Vec<Vec<(usize, usize)>>,
        supra: SparseMatrix,
    ) -> Self {
        Self {
            n,
            layer_names,
            intra_edges,
            supra,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layer_names.len()
    }

    pub fn supra_size(&self) -> usize {
        self.n * self.layers()
    }

    pub fn layer_names(&self) -> &[String] {
        &self.layer_names
    }

    pub fn with_layer_names(mut self, names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() != self.layers() {
            return Err(GraphError::LayerCount {
                declared: names.len(),
                found: self.layers(),
            });
        }
        self.layer_names = names;
        Ok(self)
    }

    pub fn intra_edges(&self) -> &[Vec<(usize, usize)>] {
        &self.intra_edges
    }

    pub fn supra(&self) -> &SparseMatrix {
        &self.supra
    }

    pub fn supra_index(&self, layer: usize, node: usize) -> usize {
        layer * self.n + node
    }

    pub fn intra_edge_count(&self) -> usize {
        self.intra_edges.iter().map(Vec::len).sum()
    }

    /// Intra-layer degree of `node` in `layer`.
    pub fn intra_degree(&self, layer: usize, node: usize) -> usize {
        self.intra_edges[layer]
            .iter()
            .filter(|&&(a, b)| a == node || b == node)
            .count()
    }

    /// All nodes' intra-layer degrees per layer, in one pass.
    pub fn intra_degrees(&self) -> Vec<Vec<usize>> {
        self.intra_edges
            .iter()
            .map(|edges| {
                let mut deg = vec![0; self.n];
                for &(a, b) in edges {
                    deg[a] += 1;
                    deg[b] += 1;
                }
                deg
            })
            .collect()
    }

    /// Copy with every intra-layer edge touching `nodes` removed (in every
    /// layer). Interlayer replica edges stay.
    pub fn without_intra_edges_of(&self, nodes: &[usize]) -> Self {
        let mut drop = vec![false; self.n];
        for &v in nodes {
            if v < self.n {
                drop[v] = true;
            }
        }
        let kept: Vec<Vec<(usize, usize)>> = self
            .intra_edges
            .iter()
            .map(|edges| {
                edges
                    .iter()
                    .copied()
                    .filter(|&(a, b)| !drop[a] && !drop[b])
                    .collect()
            })
            .collect();
        Self::new(self.n, self.layer_names.clone(), &kept).expect("subset of a valid topology")
    }
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` for the supra adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(pub SparseMatrix);

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.0
    }

    pub fn into_arc(self) -> Arc<SparseMatrix> {
        Arc::new(self.0)
    }
}

pub fn normalize_adjacency(topology: &MultilayerTopology) -> NormalizedAdjacency {
    let a = topology.supra();
    let size = a.rows();
    let mut degree = vec![1.0f64; size];
    for &(r, _) in a.entries() {
        degree[r] += 1.0;
    }
    let mut entries = Vec::with_capacity(a.nnz() + size);
    entries.extend(a.entries().iter().copied());
    entries.extend((0..size).map(|i| (i, i)));
    entries.sort_unstable();
    let weights = entries
        .iter()
        .map(|&(r, c)| 1.0 / (degree[r] * degree[c]).sqrt())
        .collect();
    NormalizedAdjacency(SparseMatrix::from_raw_parts(
        size,
        size,
        entries,
        Some(weights),
        true,
    ))
}

/// `τ` feature matrices (each `nl × d`) over one fixed topology.
#[derive(Debug, Clone)]
pub struct SnapshotSequence {
    topology: Arc<MultilayerTopology>,
    features: Vec<DenseMatrix>,
    timestamps: Vec<String>,
}

impl SnapshotSequence {
    pub fn new(
        topology: Arc<MultilayerTopology>,
        features: Vec<DenseMatrix>,
        timestamps: Vec<String>,
    ) -> Result<Self, GraphError> {
        if features.is_empty() {
            return Err(GraphError::EmptySequence);
        }
        if timestamps.len() != features.len() {
            return Err(GraphError::TimestampCount {
                snapshots: features.len(),
                timestamps: timestamps.len(),
            });
        }
        let rows = topology.supra_size();
        let cols = features[0].cols();
        for (t, f) in features.iter().enumerate() {
            if f.rows() != rows || f.cols() != cols {
                return Err(GraphError::FeatureShape {
                    snapshot: t,
                    expected: (rows, cols),
                    found: f.shape(),
                });
            }
            if !f.is_finite() {
                return Err(GraphError::NonFiniteFeature { snapshot: t });
            }
        }
        Ok(Self {
            topology,
            features,
            timestamps,
        })
    }

    pub fn topology(&self) -> &MultilayerTopology {
        &self.topology
    }

    pub fn topology_arc(&self) -> &Arc<MultilayerTopology> {
        &self.topology
    }

    pub fn features(&self) -> &[DenseMatrix] {
        &self.features
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].cols()
    }

    pub fn with_topology(&self, topology: Arc<MultilayerTopology>) -> Result<Self, GraphError> {
        Self::new(topology, self.features.clone(), self.timestamps.clone())
    }

    pub fn with_features(&self, features: Vec<DenseMatrix>) -> Result<Self, GraphError> {
        Self::new(self.topology.clone(), features, self.timestamps.clone())
    }
}

/// The `⌊fraction · n⌋` nodes isolated for a given seed, sorted ascending.
pub fn isolation_sample(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>, GraphError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(GraphError::Fraction(fraction));
    }
    let k = ((fraction * n as f64).floor() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Removes all intra-layer edges of a seeded uniform sample of nodes, once for
/// the whole window.
pub fn isolate_nodes(
    seq: &SnapshotSequence,
    fraction: f64,
    seed: u64,
) -> Result<SnapshotSequence, GraphError> {
    let picked = isolation_sample(seq.topology().n(), fraction, seed)?;
    if picked.is_empty() {
        return Ok(seq.clone());
    }
    let topo = seq.topology().without_intra_edges_of(&picked);
    seq.with_topology(Arc::new(topo))
}

/// Stacks the per-node matrix once per layer, so row `k·n + i` is input row `i`.
pub fn replicate_features(per_node: &DenseMatrix, layers: usize) -> DenseMatrix {
    per_node.tile_rows(layers)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Shape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    Asymmetry {
        row: usize,
        col: usize,
    },
    NonBinary {
        row: usize,
        col: usize,
    },
    SelfLoop {
        index: usize,
    },
    ReplicaCoupling {
        row: usize,
        col: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape {
                rows,
                cols,
                expected,
            } => {
                write!(
                    f,
                    "shape: supra is {rows}x{cols}, expected {expected}x{expected}"
                )
            }
            Violation::Asymmetry { row, col } => {
                write!(f, "asymmetry: ({row}, {col}) has no mirror")
            }
            Violation::NonBinary { row, col } => write!(f, "non-binary entry at ({row}, {col})"),
            Violation::SelfLoop { index } => write!(f, "self loop at {index}"),
            Violation::ReplicaCoupling { row, col } => {
                write!(
                    f,
                    "replica coupling: ({row}, {col}) links different nodes across layers"
                )
            }
        }
    }
}

/// Structural audit of a supra adjacency. Empty iff the matrix is symmetric,
/// binary, zero-diagonal, and only couples replicas of the same node across layers.
pub fn validate_topology(topology: &MultilayerTopology) -> Vec<Violation> {
    let s = topology.supra();
    let n = topology.n();
    let size = topology.supra_size();
    let mut out = Vec::new();
    if s.rows() != size || s.cols() != size {
        out.push(Violation::Shape {
            rows: s.rows(),
            cols: s.cols(),
            expected: size,
        });
        return out;
    }
    for (k, &(r, c)) in s.entries().iter().enumerate() {
        if s.weight(k) != 1.0 {
            out.push(Violation::NonBinary { row: r, col: c });
        }
        if r == c {
            out.push(Violation::SelfLoop { index: r });
            continue;
        }
        if !s.contains(c, r) {
            out.push(Violation::Asymmetry { row: r, col: c });
        }
        let cross_layer = n > 0 && r / n != c / n;
        if cross_layer && r % n != c % n && (r < c || !s.contains(c, r)) {
            out.push(Violation::ReplicaCoupling {
                row: r.min(c),
                col: r.max(c),
            });
        }
    }
    out
}
