mod common;

use std::sync::Arc;

use common::{gradcheck, random_matrix, reference_matmul, rng};
use dymgnn::tensor::{
    dropout_mask, segment_softmax_values, Activation, DenseMatrix, Elementwise, SparseMatrix, Tape,
};
use proptest::prelude::*;
use rand::Rng;

const GRAD_TOL: f64 = 1e-5;

fn random_sparse(
    rng: &mut rand_chacha::ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
    weighted: bool,
) -> SparseMatrix {
    let mut trip = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen::<f64>() < density {
                trip.push((
                    r,
                    c,
                    if weighted {
                        rng.gen_range(-2.0..2.0)
                    } else {
                        1.0
                    },
                ));
            }
        }
    }
    if weighted {
        SparseMatrix::from_triplets(rows, cols, trip).unwrap()
    } else {
        SparseMatrix::from_pairs(rows, cols, trip.into_iter().map(|(r, c, _)| (r, c))).unwrap()
    }
}

#[test]
fn matmul_examples() {
    let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
    assert_eq!(DenseMatrix::identity(2).matmul(&m).unwrap(), m);
    assert_eq!(m.matmul(&DenseMatrix::identity(2)).unwrap(), m);
    let b = DenseMatrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
    let expected = reference_matmul(&m, &b);
    assert_eq!(
        expected,
        DenseMatrix::from_rows(&[&[19.0, 22.0], &[43.0, 50.0]])
    );
    assert_eq!(m.matmul(&b).unwrap(), expected);
}

#[test]
fn matmul_shape_error_names_both_shapes() {
    let err = DenseMatrix::zeros(2, 3)
        .matmul(&DenseMatrix::zeros(2, 3))
        .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("2x3"), "{msg}");
}

#[test]
fn transposed_products_match_reference() {
    let mut r = rng(5);
    let a = random_matrix(&mut r, 4, 3, 1.0);
    let b = random_matrix(&mut r, 5, 3, 1.0);
    let c = random_matrix(&mut r, 4, 2, 1.0);
    assert!(
        a.matmul_t(&b)
            .unwrap()
            .max_abs_diff(&reference_matmul(&a, &b.transpose()))
            < 1e-14
    );
    assert!(
        a.t_matmul(&c)
            .unwrap()
            .max_abs_diff(&reference_matmul(&a.transpose(), &c))
            < 1e-14
    );
}

#[test]
fn spmm_matches_densified_oracle_bitwise() {
    let mut r = rng(11);
    let s = random_sparse(&mut r, 8, 8, 0.3, false);
    let d = random_matrix(&mut r, 8, 4, 3.0);
    let got = s.spmm(&d).unwrap();
    let want = reference_matmul(&s.densify(), &d);
    for (a, b) in got.values().iter().zip(want.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn spmm_random_cases_bitwise() {
    let mut r = rng(12);
    for case in 0..200 {
        let rows = r.gen_range(1..=32);
        let inner = r.gen_range(1..=32);
        let cols = r.gen_range(1..=6);
        let density = r.gen_range(0.0..0.6);
        let s = random_sparse(&mut r, rows, inner, density, case % 2 == 0);
        let d = random_matrix(&mut r, inner, cols, 5.0);
        let got = s.spmm(&d).unwrap();
        let want = s.densify().matmul(&d).unwrap();
        assert!(
            got.values()
                .iter()
                .zip(want.values())
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            "case {case}"
        );
    }
}

#[test]
fn elementwise_examples() {
    let m = DenseMatrix::from_rows(&[&[1.5, -2.0], &[0.25, 3.0]]);
    let mut tape = Tape::new();
    let a = tape.constant(m.clone());
    let ones = tape.constant(DenseMatrix::filled(2, 2, 1.0));
    let zeros = tape.constant(DenseMatrix::zeros(2, 2));
    let h = tape.hadamard(a, ones).unwrap();
    assert_eq!(tape.value(h), &m);
    let s = tape.add(a, zeros).unwrap();
    assert_eq!(tape.value(s), &m);
    let x = tape.constant(DenseMatrix::from_rows(&[&[2.0, 3.0]]));
    let y = tape.constant(DenseMatrix::from_rows(&[&[4.0, 5.0]]));
    let p = tape.hadamard(x, y).unwrap();
    assert_eq!(tape.value(p), &DenseMatrix::from_rows(&[&[8.0, 15.0]]));
    let bad = tape.constant(DenseMatrix::zeros(3, 1));
    assert!(tape.add(a, bad).is_err());
}

#[test]
fn bias_row_broadcasts() {
    let mut tape = Tape::new();
    let a = tape.constant(DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
    let b = tape.constant(DenseMatrix::from_rows(&[&[10.0, 20.0]]));
    let s = tape.add(a, b).unwrap();
    assert_eq!(
        tape.value(s),
        &DenseMatrix::from_rows(&[&[11.0, 22.0], &[13.0, 24.0]])
    );
}

#[test]
fn activation_examples() {
    let mut tape = Tape::new();
    let z = tape.constant(DenseMatrix::scalar(0.0));
    let s = tape.sigmoid(z).unwrap();
    assert_eq!(tape.value(s).item().unwrap(), 0.5);
    let t = tape.tanh(z).unwrap();
    assert_eq!(tape.value(t).item().unwrap(), 0.0);
    let m1 = tape.constant(DenseMatrix::scalar(-1.0));
    let l = tape.activation(Activation::LeakyRelu(0.2), m1).unwrap();
    assert!((tape.value(l).item().unwrap() + 0.2).abs() < 1e-15);
    let big = tape.constant(DenseMatrix::from_rows(&[&[1e3, -1e3]]));
    let sb = tape.sigmoid(big).unwrap();
    assert!(tape.value(sb).values().iter().all(|&v| v > 0.0 && v < 1.0));
}

#[test]
fn segment_softmax_examples() {
    assert_eq!(segment_softmax_values(&[3.7], &[0], 1).unwrap(), vec![1.0]);
    let u = segment_softmax_values(&[0.0, 0.0, 0.0], &[0, 0, 0], 1).unwrap();
    for v in u {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    let p = segment_softmax_values(&[0.0, 3f64.ln()], &[0, 0], 1).unwrap();
    assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    assert!(
        segment_softmax_values(&[1.0], &[0], 2).is_err(),
        "empty segment must error"
    );
}

#[test]
fn segment_softmax_survives_large_scores() {
    let p = segment_softmax_values(&[1000.0, 1001.0, -5000.0, 0.0], &[0, 0, 1, 1], 2).unwrap();
    assert!(p.iter().all(|v| v.is_finite()));
    assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
}

#[test]
fn dropout_examples() {
    let mut r = rng(3);
    let m = random_matrix(&mut r, 5, 5, 1.0);
    let mut tape = Tape::new();
    let a = tape.constant(m.clone());
    let d0 = tape.dropout(a, 0.0, true, 1).unwrap();
    assert_eq!(tape.value(d0), &m);
    let eval = tape.dropout(a, 0.7, false, 1).unwrap();
    assert_eq!(tape.value(eval), &m);
    assert!(tape.dropout(a, 1.0, true, 1).is_err());
    assert!(tape.dropout(a, -0.1, true, 1).is_err());
}

#[test]
fn dropout_rate_and_expectation() {
    let ones = DenseMatrix::filled(100, 100, 1.0);
    let mut mean_out = 0.0;
    for seed in 0..10u64 {
        let mask = dropout_mask(ones.shape(), 0.5, seed);
        let zeroed = mask.values().iter().filter(|&&v| v == 0.0).count() as f64 / 1e4;
        assert!((zeroed - 0.5).abs() < 0.02, "seed {seed}: {zeroed}");
        mean_out += mask.sum() / 1e4 / 10.0;
    }
    assert!((mean_out - 1.0).abs() < 0.02, "E[output] = {mean_out}");
    assert_eq!(dropout_mask((4, 4), 0.5, 9), dropout_mask((4, 4), 0.5, 9));
}

#[test]
fn backward_square() {
    let mut tape = Tape::new();
    let w = tape.param("w", DenseMatrix::scalar(3.0));
    let sq = tape.hadamard(w, w).unwrap();
    let loss = tape.sum(sq).unwrap();
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get("w").unwrap().item().unwrap(), 6.0);
}

#[test]
fn backward_unused_parameter_is_zero() {
    let mut tape = Tape::new();
    let w = tape.param("w", DenseMatrix::scalar(3.0));
    let _unused = tape.param("u", DenseMatrix::filled(2, 3, 1.0));
    let loss = tape.sum(w).unwrap();
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get("u").unwrap(), &DenseMatrix::zeros(2, 3));
}

#[test]
fn backward_rejects_non_scalar() {
    let mut tape = Tape::new();
    let w = tape.param("w", DenseMatrix::zeros(2, 1));
    assert!(tape.backward(w).is_err());
}

#[test]
fn sum_sigmoid_xw_gradcheck() {
    let mut r = rng(21);
    let x = random_matrix(&mut r, 6, 3, 1.0);
    let w = random_matrix(&mut r, 3, 1, 1.0);
    let err = gradcheck(&[("x", x), ("w", w)], |t, v| {
        let xw = t.matmul(v[0], v[1]).unwrap();
        let s = t.sigmoid(xw).unwrap();
        t.sum(s).unwrap()
    });
    assert!(err < GRAD_TOL, "{err}");
}

/// Every differentiable primitive over 20 seeds on matrices up to 8×8.
#[test]
fn primitive_gradients_match_finite_differences() {
    for seed in 0..20u64 {
        let mut r = rng(100 + seed);
        let n = r.gen_range(1..=8);
        let k = r.gen_range(1..=8);
        let m = r.gen_range(1..=8);
        let a = random_matrix(&mut r, n, k, 1.0);
        let b = random_matrix(&mut r, k, m, 1.0);
        let bt = random_matrix(&mut r, m, k, 1.0);
        let c = random_matrix(&mut r, n, k, 1.0);
        let bias = random_matrix(&mut r, 1, k, 1.0);
        let proj = random_matrix(&mut r, n, k, 1.0);
        let weight = |t: &mut Tape, v| {
            // contract against a fixed random matrix so the loss is not a plain sum
            let p = t.constant(proj.clone());
            let h = t.hadamard(v, p).unwrap();
            t.sum(h).unwrap()
        };

        let checks: Vec<(&str, f64)> = vec![
            (
                "matmul",
                gradcheck(&[("a", a.clone()), ("b", b.clone())], |t, v| {
                    let o = t.matmul(v[0], v[1]).unwrap();
                    let s = t.sigmoid(o).unwrap();
                    t.sum(s).unwrap()
                }),
            ),
            (
                "matmul_t",
                gradcheck(&[("a", a.clone()), ("b", bt.clone())], |t, v| {
                    let o = t.matmul_t(v[0], v[1]).unwrap();
                    let s = t.tanh(o).unwrap();
                    t.sum(s).unwrap()
                }),
            ),
            (
                "add",
                gradcheck(&[("a", a.clone()), ("c", c.clone())], |t, v| {
                    let o = t.elementwise(Elementwise::Add, v[0], v[1]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "sub",
                gradcheck(&[("a", a.clone()), ("c", c.clone())], |t, v| {
                    let o = t.elementwise(Elementwise::Sub, v[0], v[1]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "hadamard",
                gradcheck(&[("a", a.clone()), ("c", c.clone())], |t, v| {
                    let o = t.hadamard(v[0], v[1]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "bias_broadcast",
                gradcheck(&[("a", a.clone()), ("bias", bias.clone())], |t, v| {
                    let o = t.add(v[0], v[1]).unwrap();
                    let o = t.hadamard(o, v[1]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "affine",
                gradcheck(&[("a", a.clone())], |t, v| {
                    let o = t.affine(v[0], -1.5, 0.3).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "sigmoid",
                gradcheck(&[("a", a.clone())], |t, v| {
                    let o = t.sigmoid(v[0]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "tanh",
                gradcheck(&[("a", a.clone())], |t, v| {
                    let o = t.tanh(v[0]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "leaky_relu",
                gradcheck(&[("a", a.clone())], |t, v| {
                    let o = t.activation(Activation::LeakyRelu(0.2), v[0]).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "scale_by",
                gradcheck(
                    &[("s", DenseMatrix::scalar(0.7)), ("a", a.clone())],
                    |t, v| {
                        let o = t.scale_by(v[0], v[1]).unwrap();
                        weight(t, o)
                    },
                ),
            ),
            (
                "resize_cols",
                gradcheck(&[("a", a.clone())], |t, v| {
                    let o = t.resize_cols(v[0], k.max(2) - 1).unwrap();
                    let o = t.resize_cols(o, k).unwrap();
                    weight(t, o)
                }),
            ),
            (
                "entry+concat",
                gradcheck(&[("a", a.clone()), ("c", c.clone())], |t, v| {
                    let e = t.entry(v[0], n - 1, 0).unwrap();
                    let cat = t.concat_rows(&[v[0], v[1]]).unwrap();
                    let s = t.sigmoid(cat).unwrap();
                    let s = t.sum(s).unwrap();
                    let sc = t.scale_by(e, s).unwrap();
                    t.sum(sc).unwrap()
                }),
            ),
        ];
        for (name, err) in checks {
            assert!(err < GRAD_TOL, "seed {seed} op {name}: {err}");
        }
    }
}

#[test]
fn graph_primitive_gradients_match_finite_differences() {
    for seed in 0..20u64 {
        let mut r = rng(300 + seed);
        let nodes = r.gen_range(2..=8);
        let d = r.gen_range(1..=4);
        let s = Arc::new(random_sparse(&mut r, nodes, nodes, 0.4, true));
        let h = random_matrix(&mut r, nodes, d, 1.0);
        // random edge list with self-edges so every segment is populated
        let mut dst: Vec<usize> = (0..nodes).collect();
        let mut src: Vec<usize> = (0..nodes).collect();
        for _ in 0..r.gen_range(0..12) {
            dst.push(r.gen_range(0..nodes));
            src.push(r.gen_range(0..nodes));
        }
        let e = dst.len();
        let scores = random_matrix(&mut r, e, 1, 2.0);
        let proj = random_matrix(&mut r, nodes, d, 1.0);
        let labels: Vec<f64> = (0..nodes)
            .map(|_| if r.gen::<bool>() { 1.0 } else { 0.0 })
            .collect();
        let (dst, src) = (Arc::new(dst), Arc::new(src));

        let spmm = gradcheck(&[("h", h.clone())], |t, v| {
            let o = t.spmm(s.clone(), v[0]).unwrap();
            let o = t.tanh(o).unwrap();
            let p = t.constant(proj.clone());
            let o = t.hadamard(o, p).unwrap();
            t.sum(o).unwrap()
        });
        assert!(spmm < GRAD_TOL, "seed {seed} spmm: {spmm}");

        let attn = gradcheck(&[("scores", scores.clone()), ("h", h.clone())], |t, v| {
            let alpha = t.segment_softmax(v[0], dst.clone(), nodes).unwrap();
            let o = t
                .edge_aggregate(alpha, v[1], dst.clone(), src.clone(), nodes)
                .unwrap();
            let p = t.constant(proj.clone());
            let o = t.hadamard(o, p).unwrap();
            t.sum(o).unwrap()
        });
        assert!(attn < GRAD_TOL, "seed {seed} softmax/aggregate: {attn}");

        let gather = gradcheck(&[("h", h.clone())], |t, v| {
            let g = t.gather_rows(v[0], src.clone()).unwrap();
            let g = t.sigmoid(g).unwrap();
            t.sum(g).unwrap()
        });
        assert!(gather < GRAD_TOL, "seed {seed} gather: {gather}");

        let bce = gradcheck(&[("h", h.clone())], |t, v| {
            let w = t.constant(DenseMatrix::filled(d, 1, 0.5));
            let z = t.matmul(v[0], w).unwrap();
            let p = t.sigmoid(z).unwrap();
            t.bce(p, Arc::new(labels.clone())).unwrap()
        });
        assert!(bce < GRAD_TOL, "seed {seed} bce: {bce}");
        assert_eq!(e, dst.len());
    }
}

#[test]
fn ops_are_bit_deterministic() {
    let run = || {
        let mut r = rng(77);
        let mut tape = Tape::new();
        let x = tape.param("x", random_matrix(&mut r, 8, 5, 1.0));
        let w = tape.param("w", random_matrix(&mut r, 5, 3, 1.0));
        let xw = tape.matmul(x, w).unwrap();
        let d = tape.dropout(xw, 0.3, true, 42).unwrap();
        let s = tape.tanh(d).unwrap();
        let loss = tape.sum(s).unwrap();
        let g = tape.backward(loss).unwrap();
        (
            tape.value(loss).clone(),
            g.get("x").unwrap().clone(),
            g.get("w").unwrap().clone(),
        )
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0.values()[0].to_bits(), b.0.values()[0].to_bits());
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
}

proptest! {
    #[test]
    fn sigmoid_is_symmetric(x in -40.0f64..40.0) {
        let mut tape = Tape::new();
        let a = tape.constant(DenseMatrix::from_rows(&[&[x, -x]]));
        let s = tape.sigmoid(a).unwrap();
        let v = tape.value(s).values();
        prop_assert!((v[0] + v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_softmax_normalizes_and_ignores_shifts(
        scores in proptest::collection::vec(-30.0f64..30.0, 1..24),
        shift in -100.0f64..100.0,
        nseg in 1usize..4,
    ) {
        let n = scores.len();
        let nseg = nseg.min(n);
        let seg: Vec<usize> = (0..n).map(|i| i % nseg).collect();
        let p = segment_softmax_values(&scores, &seg, nseg).unwrap();
        for s in 0..nseg {
            let total: f64 = p.iter().zip(&seg).filter(|(_, &g)| g == s).map(|(v, _)| v).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        let shifted: Vec<f64> = scores.iter().zip(&seg).map(|(x, &g)| if g == 0 { x + shift } else { *x }).collect();
        let q = segment_softmax_values(&shifted, &seg, nseg).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spmm_equals_densified(seed in 0u64..1000, rows in 1usize..=32, inner in 1usize..=32) {
        let mut r = rng(seed);
        let s = random_sparse(&mut r, rows, inner, 0.25, seed % 2 == 1);
        let d = random_matrix(&mut r, inner, 3, 4.0);
        prop_assert_eq!(s.spmm(&d).unwrap(), s.densify().matmul(&d).unwrap());
    }
}
