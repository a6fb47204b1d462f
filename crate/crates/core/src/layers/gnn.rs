//! Topological encoders applied to one snapshot.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{BoundParams, LayerError, ParameterStore};
use crate::graph::{normalize_adjacency, MultilayerTopology};
use crate::tensor::{Activation, SparseMatrix, Tape, Var};

/// Isotropic graph convolution `Z = Â X Wᵀ` with `W ∈ R^{D×d}` stored as `{prefix}.weight`.
#[derive(Debug, Clone)]
pub struct GcnLayer {
    pub prefix: String,
    pub input: usize,
    pub output: usize,
}

impl GcnLayer {
    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut ChaCha8Rng) -> Result<(), LayerError> {
        store.insert_glorot(
            self.weight_name(),
            self.output,
            self.input,
            self.input,
            self.output,
            rng,
        )
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        anorm: &Arc<SparseMatrix>,
        x: Var,
    ) -> Result<Var, LayerError> {
        let w = params.get(&self.weight_name())?;
        let xw = tape.matmul_t(x, w)?;
        Ok(tape.spmm(anorm.clone(), xw)?)
    }
}

/// Directed message list for attention: every supra edge in both directions
/// plus one self-edge per node, grouped by destination.
#[derive(Debug, Clone)]
pub struct AttentionEdges {
    pub nodes: usize,
    pub dst: Arc<Vec<usize>>,
    pub src: Arc<Vec<usize>>,
}

impl AttentionEdges {
    pub fn from_topology(topology: &MultilayerTopology) -> Self {
        let supra = topology.supra();
        let nodes = supra.rows();
        let mut pairs: Vec<(usize, usize)> = supra.entries().to_vec();
        pairs.extend((0..nodes).map(|i| (i, i)));
        pairs.sort_unstable();
        pairs.dedup();
        let (dst, src) = pairs.into_iter().unzip();
        Self {
            nodes,
            dst: Arc::new(dst),
            src: Arc::new(src),
        }
    }

    pub fn len(&self) -> usize {
        self.dst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dst.is_empty()
    }
}

/// Multi-head graph attention; head outputs are averaged.
///
/// Per head `h`: `W_h ∈ R^{D×d}` at `{prefix}.head{h}.weight` and the
/// attention vector `a = [a_dst ‖ a_src]` split over `{prefix}.head{h}.attn_dst`
/// and `{prefix}.head{h}.attn_src` (each `1 × D`).
#[derive(Debug, Clone)]
pub struct GatLayer {
    pub prefix: String,
    pub input: usize,
    pub output: usize,
    pub heads: usize,
    pub slope: f64,
}

impl GatLayer {
    fn name(&self, head: usize, part: &str) -> String {
        format!("{}.head{head}.{part}", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut ChaCha8Rng) -> Result<(), LayerError> {
        if self.heads == 0 {
            return Err(LayerError::Config("GAT needs at least one head".into()));
        }
        for h in 0..self.heads {
            store.insert_glorot(
                self.name(h, "weight"),
                self.output,
                self.input,
                self.input,
                self.output,
                rng,
            )?;
            store.insert_glorot(
                self.name(h, "attn_dst"),
                1,
                self.output,
                2 * self.output,
                1,
                rng,
            )?;
            store.insert_glorot(
                self.name(h, "attn_src"),
                1,
                self.output,
                2 * self.output,
                1,
                rng,
            )?;
        }
        Ok(())
    }

    /// Returns the averaged embedding and, per head, the edge attention weights.
    pub fn forward_with_weights(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        edges: &AttentionEdges,
        x: Var,
    ) -> Result<(Var, Vec<Var>), LayerError> {
        let mut outputs = Vec::with_capacity(self.heads);
        let mut alphas = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let w = params.get(&self.name(h, "weight"))?;
            let a_dst = params.get(&self.name(h, "attn_dst"))?;
            let a_src = params.get(&self.name(h, "attn_src"))?;
            let wx = tape.matmul_t(x, w)?;
            let s_dst = tape.matmul_t(wx, a_dst)?;
            let s_src = tape.matmul_t(wx, a_src)?;
            let e_dst = tape.gather_rows(s_dst, edges.dst.clone())?;
            let e_src = tape.gather_rows(s_src, edges.src.clone())?;
            let e = tape.add(e_dst, e_src)?;
            let e = tape.activation(Activation::LeakyRelu(self.slope), e)?;
            let alpha = tape.segment_softmax(e, edges.dst.clone(), edges.nodes)?;
            let z =
                tape.edge_aggregate(alpha, wx, edges.dst.clone(), edges.src.clone(), edges.nodes)?;
            outputs.push(z);
            alphas.push(alpha);
        }
        let mut acc = outputs[0];
        for &z in &outputs[1..] {
            acc = tape.add(acc, z)?;
        }
        if self.heads > 1 {
            acc = tape.affine(acc, 1.0 / self.heads as f64, 0.0)?;
        }
        Ok((acc, alphas))
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        edges: &AttentionEdges,
        x: Var,
    ) -> Result<Var, LayerError> {
        Ok(self.forward_with_weights(tape, params, edges, x)?.0)
    }
}

/// Graph structure precomputed once per window for either encoder.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub normalized: Arc<SparseMatrix>,
    pub edges: AttentionEdges,
}

impl GraphContext {
    pub fn new(topology: &MultilayerTopology) -> Self {
        Self {
            normalized: normalize_adjacency(topology).into_arc(),
            edges: AttentionEdges::from_topology(topology),
        }
    }
}
