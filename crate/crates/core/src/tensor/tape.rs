//! Tape-based reverse-mode automatic differentiation over dense matrices.
//!
//! Every operation appends a node holding its forward value and the ids of its
//! inputs. Since inputs always exist before their consumers, the node vector is
//! already in topological order and [`Tape::backward`] only has to walk it in
//! reverse once.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DenseMatrix, SparseMatrix, TensorError};

/// Lower/upper margin applied to sigmoid outputs so they stay strictly inside (0, 1).
pub const SIGMOID_MARGIN: f64 = 1e-15;

/// Probability clamp used by [`Tape::bce`].
pub const BCE_CLAMP: f64 = 1e-7;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    LeakyRelu(f64),
}

impl Activation {
    pub const RELU: Activation = Activation::LeakyRelu(0.0);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementwise {
    Add,
    Sub,
    Hadamard,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    SpMM(Arc<SparseMatrix>, Var),
    Elementwise(Elementwise, Var, Var),
    Affine(Var, f64),
    ScaleBy(Var, Var),
    Activation(Activation, Var),
    SegmentSoftmax(Var, Arc<Vec<usize>>),
    GatherRows(Var, Arc<Vec<usize>>),
    EdgeAggregate {
        alpha: Var,
        h: Var,
        dst: Arc<Vec<usize>>,
        src: Arc<Vec<usize>>,
    },
    ConcatRows(Vec<Var>),
    Entry(Var, usize, usize),
    ResizeCols(Var),
    Sum(Var),
    Bce(Var, Arc<Vec<f64>>),
}

#[derive(Debug)]
struct Node {
    value: DenseMatrix,
    op: Op,
    requires_grad: bool,
    param: Option<String>,
}

/// Gradients of a scalar loss keyed by parameter name.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_name: BTreeMap<String, DenseMatrix>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&DenseMatrix> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &DenseMatrix)> {
        self.by_name.iter()
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, DenseMatrix> {
        self.by_name
    }

    /// Largest absolute gradient entry, or 0 for an empty set.
    pub fn max_abs(&self) -> f64 {
        self.by_name
            .values()
            .flat_map(|m| m.values().iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Records a computation for reverse-mode differentiation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn broadcast_ok(a: (usize, usize), b: (usize, usize)) -> bool {
    a == b || (b.0 == 1 && b.1 == a.1)
}

pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(SIGMOID_MARGIN, 1.0 - SIGMOID_MARGIN)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(
        &mut self,
        value: DenseMatrix,
        op: Op,
        requires_grad: bool,
    ) -> Result<Var, TensorError> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite(op_name(&op)));
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            param: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    /// Learnable leaf; its gradient is reported under `name`.
    pub fn param(&mut self, name: impl Into<String>, value: DenseMatrix) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
            param: Some(name.into()),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let v = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::MatMul(a, b), rg)
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let v = self.value(a).matmul_t(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::MatMulT(a, b), rg)
    }

    /// Sparse (constant) times dense (differentiable).
    pub fn spmm(&mut self, s: Arc<SparseMatrix>, d: Var) -> Result<Var, TensorError> {
        let v = s.spmm(self.value(d))?;
        let rg = self.rg(d);
        self.push(v, Op::SpMM(s, d), rg)
    }

    /// Entrywise `a ∘ b`; `b` may also be a `1 × cols` row broadcast over `a`.
    pub fn elementwise(&mut self, op: Elementwise, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if !broadcast_ok(sa, sb) {
            return Err(TensorError::shape(elementwise_name(op), sa, sb));
        }
        let av = self.value(a);
        let bv = self.value(b);
        let mut out = av.clone();
        let cols = sa.1;
        for (i, o) in out.values_mut().iter_mut().enumerate() {
            let bj = if sb == sa {
                bv.values()[i]
            } else {
                bv.values()[i % cols]
            };
            *o = match op {
                Elementwise::Add => *o + bj,
                Elementwise::Sub => *o - bj,
                Elementwise::Hadamard => *o * bj,
            };
        }
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Elementwise(op, a, b), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise(Elementwise::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise(Elementwise::Sub, a, b)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise(Elementwise::Hadamard, a, b)
    }

    /// `scale · a + shift` with constant coefficients.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Result<Var, TensorError> {
        let v = self.value(a).map(|x| scale * x + shift);
        let rg = self.rg(a);
        self.push(v, Op::Affine(a, scale), rg)
    }

    /// Multiplies every entry of `m` by the 1×1 node `s`.
    pub fn scale_by(&mut self, s: Var, m: Var) -> Result<Var, TensorError> {
        let k = self.value(s).item()?;
        let v = self.value(m).map(|x| k * x);
        let rg = self.rg(s) || self.rg(m);
        self.push(v, Op::ScaleBy(s, m), rg)
    }

    pub fn activation(&mut self, kind: Activation, a: Var) -> Result<Var, TensorError> {
        let v = match kind {
            Activation::Sigmoid => self.value(a).map(sigmoid_scalar),
            Activation::Tanh => self.value(a).map(f64::tanh),
            Activation::LeakyRelu(slope) => {
                self.value(a).map(|x| if x > 0.0 { x } else { slope * x })
            }
        };
        let rg = self.rg(a);
        self.push(v, Op::Activation(kind, a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, TensorError> {
        self.activation(Activation::Sigmoid, a)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, TensorError> {
        self.activation(Activation::Tanh, a)
    }

    /// Softmax of a column vector within groups given by `segments`
    /// (one group label per entry, labels dense in `0..num_segments`).
    pub fn segment_softmax(
        &mut self,
        scores: Var,
        segments: Arc<Vec<usize>>,
        num_segments: usize,
    ) -> Result<Var, TensorError> {
        let x = self.value(scores);
        if x.cols() != 1 || x.rows() != segments.len() {
            return Err(TensorError::shape(
                "segment_softmax",
                x.shape(),
                (segments.len(), 1),
            ));
        }
        let out = segment_softmax_values(x.values(), &segments, num_segments)?;
        let rg = self.rg(scores);
        self.push(
            DenseMatrix::column(&out),
            Op::SegmentSoftmax(scores, segments),
            rg,
        )
    }

    /// Output row `k` is row `idx[k]` of `m`.
    pub fn gather_rows(&mut self, m: Var, idx: Arc<Vec<usize>>) -> Result<Var, TensorError> {
        let mv = self.value(m);
        if let Some(&bad) = idx.iter().find(|&&i| i >= mv.rows()) {
            return Err(TensorError::IndexOutOfRange {
                row: bad,
                col: 0,
                rows: mv.rows(),
                cols: mv.cols(),
            });
        }
        let v = mv.select_rows(&idx);
        let rg = self.rg(m);
        self.push(v, Op::GatherRows(m, idx), rg)
    }

    /// Weighted message passing: `out[dst[e]] += alpha[e] · h[src[e]]` over edges `e`.
    pub fn edge_aggregate(
        &mut self,
        alpha: Var,
        h: Var,
        dst: Arc<Vec<usize>>,
        src: Arc<Vec<usize>>,
        out_rows: usize,
    ) -> Result<Var, TensorError> {
        let (av, hv) = (self.value(alpha), self.value(h));
        if av.cols() != 1 || av.rows() != dst.len() || dst.len() != src.len() {
            return Err(TensorError::shape(
                "edge_aggregate",
                av.shape(),
                (dst.len(), 1),
            ));
        }
        if src.iter().any(|&s| s >= hv.rows()) || dst.iter().any(|&d| d >= out_rows) {
            return Err(TensorError::IndexOutOfRange {
                row: out_rows,
                col: 0,
                rows: hv.rows(),
                cols: hv.cols(),
            });
        }
        let mut out = DenseMatrix::zeros(out_rows, hv.cols());
        for e in 0..dst.len() {
            let w = av.values()[e];
            for (o, &x) in out.row_mut(dst[e]).iter_mut().zip(hv.row(src[e])) {
                *o += w * x;
            }
        }
        let rg = self.rg(alpha) || self.rg(h);
        self.push(out, Op::EdgeAggregate { alpha, h, dst, src }, rg)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Empty("concat_rows"))?;
        let cols = self.value(*first).cols();
        let mut values = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(TensorError::shape("concat_rows", (rows, cols), v.shape()));
            }
            rows += v.rows();
            values.extend_from_slice(v.values());
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(
            DenseMatrix::from_vec(rows, cols, values)?,
            Op::ConcatRows(parts.to_vec()),
            rg,
        )
    }

    /// The single entry `(r, c)` as a 1×1 node.
    pub fn entry(&mut self, a: Var, r: usize, c: usize) -> Result<Var, TensorError> {
        let av = self.value(a);
        if r >= av.rows() || c >= av.cols() {
            return Err(TensorError::IndexOutOfRange {
                row: r,
                col: c,
                rows: av.rows(),
                cols: av.cols(),
            });
        }
        let v = DenseMatrix::scalar(av.get(r, c));
        let rg = self.rg(a);
        self.push(v, Op::Entry(a, r, c), rg)
    }

    /// Truncates or zero-pads columns to `cols`.
    pub fn resize_cols(&mut self, a: Var, cols: usize) -> Result<Var, TensorError> {
        let av = self.value(a);
        let mut out = DenseMatrix::zeros(av.rows(), cols);
        let keep = cols.min(av.cols());
        for r in 0..av.rows() {
            out.row_mut(r)[..keep].copy_from_slice(&av.row(r)[..keep]);
        }
        let rg = self.rg(a);
        self.push(out, Op::ResizeCols(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, TensorError> {
        let v = DenseMatrix::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(v, Op::Sum(a), rg)
    }

    /// Mean binary cross-entropy of a column of probabilities against 0/1
    /// labels, with predictions clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]`.
    pub fn bce(&mut self, pred: Var, labels: Arc<Vec<f64>>) -> Result<Var, TensorError> {
        let p = self.value(pred);
        if p.cols() != 1 || p.rows() != labels.len() {
            return Err(TensorError::shape("bce", p.shape(), (labels.len(), 1)));
        }
        let loss = bce_value(p.values(), &labels);
        let rg = self.rg(pred);
        self.push(DenseMatrix::scalar(loss), Op::Bce(pred, labels), rg)
    }

    /// Inverted dropout with a mask drawn from `seed`. Identity when not
    /// training or when `p == 0`.
    pub fn dropout(
        &mut self,
        a: Var,
        p: f64,
        training: bool,
        seed: u64,
    ) -> Result<Var, TensorError> {
        if !(0.0..1.0).contains(&p) {
            return Err(TensorError::Probability(p));
        }
        if !training || p == 0.0 {
            return Ok(a);
        }
        let mask = dropout_mask(self.value(a).shape(), p, seed);
        let m = self.constant(mask);
        self.hadamard(a, m)
    }

    /// Reverse pass from the scalar `loss`. Every named parameter on the tape
    /// receives an entry; parameters the loss does not depend on get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(TensorError::NotScalar {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        let mut grads: Vec<Option<DenseMatrix>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(DenseMatrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }

        let mut by_name = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(name) = &node.param {
                let g = grads
                    .get(i)
                    .and_then(|g| g.clone())
                    .unwrap_or_else(|| DenseMatrix::zeros(node.value.rows(), node.value.cols()));
                match by_name.get_mut(name) {
                    Some(existing) => DenseMatrix::add_assign(existing, &g),
                    None => {
                        by_name.insert(name.clone(), g);
                    }
                }
            }
        }
        Ok(Gradients { by_name })
    }

    fn accumulate(&self, grads: &mut [Option<DenseMatrix>], v: Var, g: DenseMatrix) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(
        &self,
        node: &Node,
        g: &DenseMatrix,
        grads: &mut [Option<DenseMatrix>],
    ) -> Result<(), TensorError> {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g.matmul_t(self.value(*b))?);
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, self.value(*a).t_matmul(g)?);
                }
            }
            Op::MatMulT(a, b) => {
                // out = a bᵀ: da = g b, db = gᵀ a
                if self.rg(*a) {
                    self.accumulate(grads, *a, g.matmul(self.value(*b))?);
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, g.t_matmul(self.value(*a))?);
                }
            }
            Op::SpMM(s, d) => {
                self.accumulate(grads, *d, s.t_spmm(g)?);
            }
            Op::Elementwise(kind, a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let broadcast = av.shape() != bv.shape();
                let cols = av.cols();
                if self.rg(*a) {
                    let ga = match kind {
                        Elementwise::Add | Elementwise::Sub => g.clone(),
                        Elementwise::Hadamard => {
                            let mut ga = g.clone();
                            for (i, x) in ga.values_mut().iter_mut().enumerate() {
                                let bj = if broadcast {
                                    bv.values()[i % cols]
                                } else {
                                    bv.values()[i]
                                };
                                *x *= bj;
                            }
                            ga
                        }
                    };
                    self.accumulate(grads, *a, ga);
                }
                if self.rg(*b) {
                    let mut full = g.clone();
                    match kind {
                        Elementwise::Add => {}
                        Elementwise::Sub => full.scale_in_place(-1.0),
                        Elementwise::Hadamard => {
                            for (x, &y) in full.values_mut().iter_mut().zip(av.values()) {
                                *x *= y;
                            }
                        }
                    }
                    let gb = if broadcast {
                        let mut s = DenseMatrix::zeros(1, cols);
                        for r in 0..full.rows() {
                            for (o, &x) in s.values_mut().iter_mut().zip(full.row(r)) {
                                *o += x;
                            }
                        }
                        s
                    } else {
                        full
                    };
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Affine(a, scale) => {
                let scale = *scale;
                self.accumulate(grads, *a, g.map(|x| x * scale));
            }
            Op::ScaleBy(s, m) => {
                let k = self.value(*s).item()?;
                if self.rg(*s) {
                    let dot: f64 = g
                        .values()
                        .iter()
                        .zip(self.value(*m).values())
                        .map(|(a, b)| a * b)
                        .sum();
                    self.accumulate(grads, *s, DenseMatrix::scalar(dot));
                }
                if self.rg(*m) {
                    self.accumulate(grads, *m, g.map(|x| x * k));
                }
            }
            Op::Activation(kind, a) => {
                let mut ga = g.clone();
                match kind {
                    Activation::Sigmoid => {
                        for (x, &y) in ga.values_mut().iter_mut().zip(node.value.values()) {
                            *x *= y * (1.0 - y);
                        }
                    }
                    Activation::Tanh => {
                        for (x, &y) in ga.values_mut().iter_mut().zip(node.value.values()) {
                            *x *= 1.0 - y * y;
                        }
                    }
                    Activation::LeakyRelu(slope) => {
                        for (x, &inp) in ga.values_mut().iter_mut().zip(self.value(*a).values()) {
                            if inp <= 0.0 {
                                *x *= slope;
                            }
                        }
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::SegmentSoftmax(a, segments) => {
                let y = node.value.values();
                let nseg = segments.iter().copied().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; nseg];
                for (i, &s) in segments.iter().enumerate() {
                    dot[s] += y[i] * g.values()[i];
                }
                let ga: Vec<f64> = segments
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| y[i] * (g.values()[i] - dot[s]))
                    .collect();
                self.accumulate(grads, *a, DenseMatrix::column(&ga));
            }
            Op::GatherRows(m, idx) => {
                let mv = self.value(*m);
                let mut gm = DenseMatrix::zeros(mv.rows(), mv.cols());
                for (k, &i) in idx.iter().enumerate() {
                    for (o, &x) in gm.row_mut(i).iter_mut().zip(g.row(k)) {
                        *o += x;
                    }
                }
                self.accumulate(grads, *m, gm);
            }
            Op::EdgeAggregate { alpha, h, dst, src } => {
                let (av, hv) = (self.value(*alpha), self.value(*h));
                if self.rg(*alpha) {
                    let ga: Vec<f64> = (0..dst.len())
                        .map(|e| {
                            g.row(dst[e])
                                .iter()
                                .zip(hv.row(src[e]))
                                .map(|(a, b)| a * b)
                                .sum()
                        })
                        .collect();
                    self.accumulate(grads, *alpha, DenseMatrix::column(&ga));
                }
                if self.rg(*h) {
                    let mut gh = DenseMatrix::zeros(hv.rows(), hv.cols());
                    for e in 0..dst.len() {
                        let w = av.values()[e];
                        for (o, &x) in gh.row_mut(src[e]).iter_mut().zip(g.row(dst[e])) {
                            *o += w * x;
                        }
                    }
                    self.accumulate(grads, *h, gh);
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let rows = self.value(p).rows();
                    if self.rg(p) {
                        let cols = g.cols();
                        let slice = g.values()[offset * cols..(offset + rows) * cols].to_vec();
                        self.accumulate(grads, p, DenseMatrix::from_vec(rows, cols, slice)?);
                    }
                    offset += rows;
                }
            }
            Op::Entry(a, r, c) => {
                let av = self.value(*a);
                let mut ga = DenseMatrix::zeros(av.rows(), av.cols());
                ga.set(*r, *c, g.values()[0]);
                self.accumulate(grads, *a, ga);
            }
            Op::ResizeCols(a) => {
                let av = self.value(*a);
                let keep = av.cols().min(g.cols());
                let mut ga = DenseMatrix::zeros(av.rows(), av.cols());
                for r in 0..av.rows() {
                    ga.row_mut(r)[..keep].copy_from_slice(&g.row(r)[..keep]);
                }
                self.accumulate(grads, *a, ga);
            }
            Op::Sum(a) => {
                let av = self.value(*a);
                self.accumulate(
                    grads,
                    *a,
                    DenseMatrix::filled(av.rows(), av.cols(), g.values()[0]),
                );
            }
            Op::Bce(pred, labels) => {
                let p = self.value(*pred).values();
                let n = labels.len() as f64;
                let scale = g.values()[0];
                let gp: Vec<f64> = p
                    .iter()
                    .zip(labels.iter())
                    .map(|(&pi, &y)| {
                        if !(BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&pi) {
                            0.0
                        } else {
                            scale * (-y / pi + (1.0 - y) / (1.0 - pi)) / n
                        }
                    })
                    .collect();
                self.accumulate(grads, *pred, DenseMatrix::column(&gp));
            }
        }
        Ok(())
    }
}

/// Numerically safe softmax within segments (max subtraction per segment).
pub fn segment_softmax_values(
    scores: &[f64],
    segments: &[usize],
    num_segments: usize,
) -> Result<Vec<f64>, TensorError> {
    if scores.len() != segments.len() {
        return Err(TensorError::shape(
            "segment_softmax",
            (scores.len(), 1),
            (segments.len(), 1),
        ));
    }
    let mut max = vec![f64::NEG_INFINITY; num_segments];
    for (&x, &s) in scores.iter().zip(segments) {
        if s >= num_segments {
            return Err(TensorError::IndexOutOfRange {
                row: s,
                col: 0,
                rows: num_segments,
                cols: 1,
            });
        }
        max[s] = max[s].max(x);
    }
    if let Some(empty) = max.iter().position(|m| *m == f64::NEG_INFINITY) {
        return Err(TensorError::EmptySegment(empty));
    }
    let mut sum = vec![0.0; num_segments];
    let exps: Vec<f64> = scores
        .iter()
        .zip(segments)
        .map(|(&x, &s)| {
            let e = (x - max[s]).exp();
            sum[s] += e;
            e
        })
        .collect();
    Ok(exps
        .iter()
        .zip(segments)
        .map(|(e, &s)| e / sum[s])
        .collect())
}

pub fn bce_value(pred: &[f64], labels: &[f64]) -> f64 {
    let n = labels.len() as f64;
    let total: f64 = pred
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            y * p.ln() + (1.0 - y) * (1.0 - p).ln()
        })
        .sum();
    -total / n
}

/// Keep-mask for inverted dropout: survivors carry `1 / (1 - p)`, dropped entries 0.
pub fn dropout_mask(shape: (usize, usize), p: f64, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = 1.0 / (1.0 - p);
    let mut m = DenseMatrix::zeros(shape.0, shape.1);
    for v in m.values_mut() {
        *v = if rng.gen::<f64>() < p { 0.0 } else { keep };
    }
    m
}

fn elementwise_name(op: Elementwise) -> &'static str {
    match op {
        Elementwise::Add => "add",
        Elementwise::Sub => "sub",
        Elementwise::Hadamard => "hadamard",
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::MatMul(..) => "matmul",
        Op::MatMulT(..) => "matmul_t",
        Op::SpMM(..) => "spmm",
        Op::Elementwise(kind, ..) => elementwise_name(*kind),
        Op::Affine(..) => "affine",
        Op::ScaleBy(..) => "scale_by",
        Op::Activation(..) => "activation",
        Op::SegmentSoftmax(..) => "segment_softmax",
        Op::GatherRows(..) => "gather_rows",
        Op::EdgeAggregate { .. } => "edge_aggregate",
        Op::ConcatRows(..) => "concat_rows",
        Op::Entry(..) => "entry",
        Op::ResizeCols(..) => "resize_cols",
        Op::Sum(..) => "sum",
        Op::Bce(..) => "bce",
    }
}
