mod common;

use std::sync::Arc;

use common::{random_window, rng};
use dymgnn::eval::*;
use dymgnn::graph::{MultilayerTopology, SnapshotSequence};
use dymgnn::model::{LabeledWindow, Model, ModelConfig};
use dymgnn::tensor::DenseMatrix;
use rand::Rng;

/// Counts concordant positive/negative pairs directly.
fn pair_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1.0 && labels[j] == 0.0 {
                den += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn random_scores(seed: u64, n: usize, signal: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let labels: Vec<f64> = (0..n).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
    // Coarse rounding produces ties.
    let scores = labels
        .iter()
        .map(|y| ((y * signal + r.gen_range(0.0..1.0)) * 20.0).round() / 20.0)
        .collect();
    (scores, labels)
}

#[test]
fn auc_matches_pair_counting_and_is_rank_invariant() {
    for seed in 0..20 {
        let (s, y) = random_scores(seed, 37, 0.4);
        let a = auc(&s, &y).unwrap();
        assert!((a - pair_auc(&s, &y)).abs() < 1e-12);
        let monotone: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        assert_eq!(auc(&monotone, &y).unwrap(), a);
    }
}

#[test]
fn f1_matches_confusion_counts() {
    let (s, y) = random_scores(3, 60, 0.3);
    for threshold in [0.2, 0.5, 0.8] {
        let pred: Vec<bool> = s.iter().map(|&v| v >= threshold).collect();
        let tp = pred
            .iter()
            .zip(&y)
            .filter(|(p, t)| **p && **t == 1.0)
            .count() as f64;
        let fp = pred
            .iter()
            .zip(&y)
            .filter(|(p, t)| **p && **t == 0.0)
            .count() as f64;
        let fneg = pred
            .iter()
            .zip(&y)
            .filter(|(p, t)| !**p && **t == 1.0)
            .count() as f64;
        // F1 = 2TP / (2TP + FP + FN).
        let expected = 2.0 * tp / (2.0 * tp + fp + fneg);
        assert!((f1(&s, &y, threshold).unwrap() - expected).abs() < 1e-12);
    }
    let (s, y) = random_scores(4, 20, 0.0);
    let recall_one = f1(&s, &y, f64::NEG_INFINITY).unwrap();
    let pos = y.iter().sum::<f64>();
    assert!((recall_one - 2.0 * pos / (pos + 20.0)).abs() < 1e-12);
}

#[test]
fn bootstrap_properties() {
    let (s, y) = random_scores(8, 200, 0.5);
    let constant = bootstrap_ci(|_, _| Ok(0.7), &s, &y, 200, 1).unwrap();
    assert_eq!((constant.lower, constant.upper), (0.7, 0.7));

    let a = bootstrap_ci(auc, &s, &y, DEFAULT_RESAMPLES, 42).unwrap();
    assert_eq!(a, bootstrap_ci(auc, &s, &y, DEFAULT_RESAMPLES, 42).unwrap());
    assert!(a.contains(a.point));
    let (s50, y50) = (&s[..50], &y[..50]);
    let small = bootstrap_ci(auc, s50, y50, DEFAULT_RESAMPLES, 42).unwrap();
    assert!(small.contains(small.point));
    assert!(
        small.width() > a.width(),
        "{} vs {}",
        small.width(),
        a.width()
    );
}

#[test]
fn bootstrap_is_statistically_invariant_to_row_order() {
    let (s, y) = random_scores(9, 200, 0.5);
    let mut idx: Vec<usize> = (0..200).collect();
    idx.reverse();
    let (s2, y2): (Vec<f64>, Vec<f64>) = idx.iter().map(|&i| (s[i], y[i])).unzip();
    let a = bootstrap_ci(auc, &s, &y, DEFAULT_RESAMPLES, 5).unwrap();
    let b = bootstrap_ci(auc, &s2, &y2, DEFAULT_RESAMPLES, 5).unwrap();
    assert_eq!(a.point, b.point);
    assert!(
        (a.lower - b.lower).abs() < 0.02 && (a.upper - b.upper).abs() < 0.02,
        "{a:?} {b:?}"
    );
}

#[test]
fn bootstrap_rejects_degenerate_input() {
    assert_eq!(
        bootstrap_ci(auc, &[0.2], &[1.0], 10, 0),
        Err(EvalError::TooFew(1))
    );
    assert_eq!(
        bootstrap_ci(auc, &[0.2, 0.3], &[1.0, 1.0], 10, 0),
        Err(EvalError::SingleClass)
    );
    // Two points, one per class: half of all resamples are single-class and get redrawn.
    let ci = bootstrap_ci(auc, &[0.2, 0.3], &[0.0, 1.0], 100, 0).unwrap();
    assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
}

#[test]
fn report_intervals_bracket_points() {
    let (s, y) = random_scores(10, 120, 0.5);
    let rep = evaluate(&s, &y, DEFAULT_THRESHOLD, 300, 1).unwrap();
    for iv in [rep.auc, rep.f1] {
        assert!(
            0.0 <= iv.lower && iv.lower <= iv.point && iv.point <= iv.upper && iv.upper <= 1.0,
            "{iv:?}"
        );
    }
    assert_eq!(rep.nodes, 120);
}

/// Shapley values by averaging marginal contributions over all d! orders.
fn permutation_oracle(d: usize, f: &dyn Fn(&[bool]) -> f64) -> Vec<f64> {
    fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.clone();
            let head = rest.remove(i);
            for mut p in perms(rest) {
                p.insert(0, head);
                out.push(p);
            }
        }
        out
    }
    let all = perms((0..d).collect());
    let mut phi = vec![0.0; d];
    for order in &all {
        let mut present = vec![false; d];
        let mut prev = f(&present);
        for &k in order {
            present[k] = true;
            let next = f(&present);
            phi[k] += next - prev;
            prev = next;
        }
    }
    phi.iter().map(|v| v / all.len() as f64).collect()
}

/// A nonlinear scorer with interactions over four features.
fn game(present: &[bool]) -> f64 {
    let x = [0.9, -0.4, 1.3, 0.2];
    let b = [0.1, 0.3, -0.2, 0.5];
    let v: Vec<f64> = (0..4)
        .map(|k| if present[k] { x[k] } else { b[k] })
        .collect();
    (v[0] * v[1] + v[2]).tanh() + v[3] * v[0] * v[2] + 0.3 * v[1]
}

#[test]
fn exact_linear_example() {
    let t = exact_shapley(2, |p| {
        Ok(vec![2.0 * p[0] as u8 as f64 + 3.0 * p[1] as u8 as f64])
    })
    .unwrap();
    assert!((t.values[0][0] - 2.0).abs() < 1e-15 && (t.values[0][1] - 3.0).abs() < 1e-15);
}

#[test]
fn exact_shapley_matches_permutation_oracle_and_is_efficient() {
    let t = exact_shapley(4, |p| Ok(vec![game(p), -game(p)])).unwrap();
    let oracle = permutation_oracle(4, &game);
    for k in 0..4 {
        assert!((t.values[0][k] - oracle[k]).abs() < 1e-12);
        assert!((t.values[1][k] + oracle[k]).abs() < 1e-12);
    }
    assert!(t.efficiency_gap() < 1e-9);
    // A 10-feature random quadratic.
    let mut r = rng(3);
    let q: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..10).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let f = |p: &[bool]| {
        let v: Vec<f64> = p.iter().map(|&b| b as u8 as f64).collect();
        (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j)))
            .map(|(i, j)| q[i][j] * v[i] * v[j])
            .sum::<f64>()
    };
    assert!(
        exact_shapley(10, |p| Ok(vec![f(p)]))
            .unwrap()
            .efficiency_gap()
            < 1e-9
    );
    assert!(exact_shapley(0, |_| Ok(vec![])).is_err());
}

#[test]
fn sampled_shapley_converges_to_exact() {
    let exact = permutation_oracle(4, &game);
    let mc = sampled_shapley(4, 2000, 17, |p| Ok(vec![game(p)])).unwrap();
    for k in 0..4 {
        assert!(
            (mc.values[0][k] - exact[k]).abs() < 0.05,
            "feature {k}: {} vs {}",
            mc.values[0][k],
            exact[k]
        );
    }
    // Each sampled permutation telescopes, so efficiency holds per sample.
    assert!(mc.efficiency_gap() < 1e-12);
    assert_eq!(
        mc,
        sampled_shapley(4, 2000, 17, |p| Ok(vec![game(p)])).unwrap()
    );
    assert_eq!(
        sampled_shapley(4, 0, 1, |p| Ok(vec![game(p)])),
        Err(EvalError::NoSamples)
    );
}

fn edgeless_window(features: Vec<DenseMatrix>, labels: Vec<f64>) -> LabeledWindow {
    let n = features[0].rows();
    let topo = MultilayerTopology::new(n, vec!["a".into()], &[vec![]]).unwrap();
    let names = (0..features.len()).map(|t| format!("t{t}")).collect();
    LabeledWindow::new(
        SnapshotSequence::new(Arc::new(topo), features, names).unwrap(),
        labels,
    )
    .unwrap()
}

#[test]
fn logistic_model_attributions() {
    // Features 0 and 1 carry equal weights and equal values; feature 2 has zero fan-out.
    let cfg = ModelConfig::new("logreg".parse().unwrap(), 3, 2, 4);
    let mut model = Model::new(cfg).unwrap();
    let w = model.params.get_mut("logreg.w").unwrap();
    for t in 0..2 {
        w.set(t * 3, 0, 0.7);
        w.set(t * 3 + 1, 0, 0.7);
    }
    let x = DenseMatrix::from_rows(&[
        &[0.9, 0.9, 0.4],
        &[0.2, 0.2, 0.8],
        &[0.5, 0.5, 0.1],
        &[0.0, 0.0, 0.3],
    ]);
    let window = edgeless_window(vec![x.clone(), x], vec![1.0, 0.0, 1.0, 0.0]);
    let table = shapley_attribution(&model, &window, &[0.5, 0.5, 0.5], 400, 2).unwrap();
    for i in 0..4 {
        assert_eq!(table.values[i][2], 0.0);
        assert!(
            (table.values[i][0] - table.values[i][1]).abs()
                < 0.05 * table.values[i][0].abs().max(1e-3)
        );
    }
    assert!(table.efficiency_gap() < 1e-12);
    assert_eq!(table.ranking()[2], 2);
    assert_eq!(table.global_importance()[2], 0.0);
}

#[test]
fn graph_model_attributions_are_efficient() {
    let mut r = rng(31);
    let window = random_window(&mut r, 10, 2, 3, 4, 0.3, |x| x[1] > 0.0);
    let model = Model::new(ModelConfig::new("gat-lstm-att".parse().unwrap(), 4, 3, 20)).unwrap();
    let table = shapley_attribution(&model, &window, &[0.0; 4], 20, 9).unwrap();
    assert_eq!((table.nodes(), table.features()), (10, 4));
    assert!(table.efficiency_gap() < 1e-12);
    let full = model.predict(&window).unwrap().probabilities;
    assert_eq!(table.full, full);
}

#[test]
fn attention_profile_properties() {
    let mut r = rng(12);
    let model = Model::new(ModelConfig::new("gcn-gru-att".parse().unwrap(), 3, 4, 30)).unwrap();
    let windows: Vec<LabeledWindow> = (0..3)
        .map(|_| random_window(&mut r, 8, 2, 4, 3, 0.3, |x| x[0] > 0.0))
        .collect();
    let profile = attention_profile(&model, &windows).unwrap();
    assert_eq!(profile.scores.len(), 4);
    assert!((profile.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(profile.pairs()[3].0, 4);

    let single = random_window(&mut r, 8, 2, 1, 3, 0.3, |x| x[0] > 0.0);
    assert_eq!(
        attention_profile(&model, std::slice::from_ref(&single))
            .unwrap()
            .scores,
        vec![1.0]
    );

    let plain = Model::new(ModelConfig::new("gcn-gru".parse().unwrap(), 3, 4, 30)).unwrap();
    assert_eq!(
        attention_profile(&plain, &[single]),
        Err(EvalError::NoAttention)
    );
}

#[test]
fn dependency_export_examples() {
    let values = vec![
        vec![1.0, 2.0, 5.0, 0.3, 1.0],
        vec![2.0, 4.0, 5.0, 0.1, 2.0],
        vec![3.0, 1.0, 5.0, 0.2, 3.0],
    ];
    assert_eq!(companion_feature(&values, 2), None);
    assert_eq!(companion_feature(&values, 0), Some(4));
    assert_eq!(companion_feature(&values, 4), Some(0));
    assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_none());

    let table = AttributionTable {
        values: vec![vec![0.1; 5]; 3],
        full: vec![0.5; 3],
        base: vec![0.0; 3],
    };
    let rows = dependency_export(&table, &values, &[0, 2, 3]).unwrap();
    assert_eq!(rows.len(), 3 * 3);
    assert!(rows
        .iter()
        .filter(|r| r.feature == 2)
        .all(|r| r.companion.is_none() && r.companion_value.is_none()));
    let r = rows.iter().find(|r| r.feature == 0 && r.node == 1).unwrap();
    assert_eq!(
        (r.value, r.companion, r.companion_value),
        (2.0, Some(4), Some(2.0))
    );
    assert!(dependency_export(&table, &values, &[7]).is_err());
}
