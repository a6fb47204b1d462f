#![allow(dead_code)]

use std::sync::Arc;

use dymgnn::graph::{MultilayerTopology, SnapshotSequence};
use dymgnn::layers::{BoundParams, ParameterStore};
use dymgnn::model::LabeledWindow;
use dymgnn::tensor::{DenseMatrix, Tape, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPS: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let v = (0..rows * cols)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    DenseMatrix::from_vec(rows, cols, v).unwrap()
}

/// Naive triple loop, written independently of `DenseMatrix::matmul`.
pub fn reference_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = vec![0.0; a.rows() * b.cols()];
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a.get(i, k) * b.get(k, j);
            }
            out[i * b.cols() + j] = acc;
        }
    }
    DenseMatrix::from_vec(a.rows(), b.cols(), out).unwrap()
}

/// Relative error with a small floor so near-zero gradients are compared absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Compares tape gradients of `build` against central finite differences
/// (step `FD_EPS`) for every entry of every named input. Returns the worst
/// relative error.
pub fn gradcheck<F>(inputs: &[(&str, DenseMatrix)], build: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let eval = |vals: &[DenseMatrix]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs
            .iter()
            .zip(vals)
            .map(|((n, _), v)| tape.param(*n, v.clone()))
            .collect();
        let loss = build(&mut tape, &vars);
        tape.value(loss).item().unwrap()
    };
    let base: Vec<DenseMatrix> = inputs.iter().map(|(_, v)| v.clone()).collect();

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|(n, v)| tape.param(*n, v.clone()))
        .collect();
    let loss = build(&mut tape, &vars);
    let grads = tape.backward(loss).unwrap();

    let mut worst = 0.0f64;
    for (pi, (name, value)) in inputs.iter().enumerate() {
        let analytic = grads.get(name).unwrap();
        for k in 0..value.len() {
            let mut plus = base.clone();
            plus[pi].values_mut()[k] += FD_EPS;
            let mut minus = base.clone();
            minus[pi].values_mut()[k] -= FD_EPS;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_EPS);
            worst = worst.max(rel_err(analytic.values()[k], numeric));
        }
    }
    worst
}

/// `Σ R ⊙ out` for a fixed random `R`, so every output entry reaches the loss
/// with a distinct weight.
pub fn probe_loss(tape: &mut Tape, out: Var, seed: u64) -> Var {
    let (r, c) = tape.value(out).shape();
    let probe = tape.constant(random_matrix(&mut rng(seed ^ 0x5eed), r, c, 1.0));
    let prod = tape.hadamard(out, probe).unwrap();
    tape.sum(prod).unwrap()
}

/// Finite-difference check over every entry of every matrix in `store`.
pub fn gradcheck_store<F>(store: &ParameterStore, build: F) -> f64
where
    F: Fn(&mut Tape, &BoundParams) -> Var,
{
    let eval = |s: &ParameterStore| -> f64 {
        let mut tape = Tape::new();
        let bound = s.bind(&mut tape);
        let loss = build(&mut tape, &bound);
        tape.value(loss).item().unwrap()
    };
    let mut tape = Tape::new();
    let bound = store.bind(&mut tape);
    let loss = build(&mut tape, &bound);
    let grads = tape.backward(loss).unwrap();

    let mut worst = 0.0f64;
    for (name, value) in store.iter() {
        let analytic = grads.get(name).unwrap();
        for k in 0..value.len() {
            let mut plus = store.clone();
            plus.get_mut(name).unwrap().values_mut()[k] += FD_EPS;
            let mut minus = store.clone();
            minus.get_mut(name).unwrap().values_mut()[k] -= FD_EPS;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_EPS);
            worst = worst.max(rel_err(analytic.values()[k], numeric));
        }
    }
    worst
}

/// Random multilayer window; features are per-node and replicated across
/// layers, labels come from `label(node_features_at_last_snapshot)`.
pub fn random_window(
    r: &mut ChaCha8Rng,
    n: usize,
    l: usize,
    tau: usize,
    d: usize,
    p_edge: f64,
    label: impl Fn(&[f64]) -> bool,
) -> LabeledWindow {
    let layers: Vec<Vec<(usize, usize)>> = (0..l)
        .map(|_| {
            let mut e = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if r.gen_bool(p_edge) {
                        e.push((a, b));
                    }
                }
            }
            e
        })
        .collect();
    let topo =
        MultilayerTopology::new(n, (0..l).map(|k| format!("l{k}")).collect(), &layers).unwrap();
    let per_node: Vec<DenseMatrix> = (0..tau).map(|_| random_matrix(r, n, d, 1.0)).collect();
    let last = per_node.last().unwrap().clone();
    let mut labels: Vec<f64> = (0..n).map(|i| label(last.row(i)) as u8 as f64).collect();
    // Both classes must be present for AUC-based checks.
    if labels.iter().all(|&y| y == labels[0]) {
        labels[0] = 1.0 - labels[0];
    }
    let feats = per_node.iter().map(|m| m.tile_rows(l)).collect();
    let seq = SnapshotSequence::new(
        Arc::new(topo),
        feats,
        (0..tau).map(|t| format!("t{t}")).collect(),
    )
    .unwrap();
    LabeledWindow::new(seq, labels).unwrap()
}
