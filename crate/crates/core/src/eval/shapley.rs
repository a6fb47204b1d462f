use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::model::{LabeledWindow, Model};
use crate::seed;

/// Largest feature count accepted by exhaustive enumeration.
pub const EXACT_MAX_FEATURES: usize = 16;

/// Shapley values per node (rows) and feature (columns), along with the two
/// endpoints they decompose: `full − base = Σ_k values[i][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionTable {
    pub values: Vec<Vec<f64>>,
    pub full: Vec<f64>,
    pub base: Vec<f64>,
}

impl AttributionTable {
    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn features(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Mean absolute attribution per feature.
    pub fn global_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.features()];
        for row in &self.values {
            imp.iter_mut().zip(row).for_each(|(a, v)| *a += v.abs());
        }
        let n = self.nodes().max(1) as f64;
        imp.into_iter().map(|a| a / n).collect()
    }

    /// Largest per-node violation of `Σ_k φ_ik = full_i − base_i`.
    pub fn efficiency_gap(&self) -> f64 {
        self.values
            .iter()
            .zip(self.full.iter().zip(&self.base))
            .map(|(row, (f, b))| (row.iter().sum::<f64>() - (f - b)).abs())
            .fold(0.0, f64::max)
    }

    /// Feature indices ordered by decreasing global importance (ties by index).
    pub fn ranking(&self) -> Vec<usize> {
        let imp = self.global_importance();
        let mut idx: Vec<usize> = (0..imp.len()).collect();
        idx.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
        idx
    }
}

fn finish(
    values: Vec<Vec<f64>>,
    full: Vec<f64>,
    base: Vec<f64>,
) -> Result<AttributionTable, EvalError> {
    if values
        .iter()
        .flatten()
        .chain(&full)
        .chain(&base)
        .any(|v| !v.is_finite())
    {
        return Err(EvalError::NonFinite);
    }
    Ok(AttributionTable { values, full, base })
}

/// Exact Shapley values by enumerating all `2^d` coalitions. `value(present)`
/// returns one output per node for the coalition of features marked `true`.
pub fn exact_shapley<F>(d: usize, mut value: F) -> Result<AttributionTable, EvalError>
where
    F: FnMut(&[bool]) -> Result<Vec<f64>, EvalError>,
{
    if d == 0 || d > EXACT_MAX_FEATURES {
        return Err(EvalError::FeatureCount(d));
    }
    let outputs: Vec<Vec<f64>> = (0..1usize << d)
        .map(|mask| value(&(0..d).map(|k| mask >> k & 1 == 1).collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;
    let n = outputs[0].len();
    // |S|! (d − |S| − 1)! / d!, by coalition size.
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let weight: Vec<f64> = (0..d)
        .map(|s| fact(s) * fact(d - s - 1) / fact(d))
        .collect();
    let mut values = vec![vec![0.0; d]; n];
    for mask in 0..1usize << d {
        let size = mask.count_ones() as usize;
        for k in (0..d).filter(|&k| mask >> k & 1 == 0) {
            let with = &outputs[mask | 1 << k];
            let without = &outputs[mask];
            for i in 0..n {
                values[i][k] += weight[size] * (with[i] - without[i]);
            }
        }
    }
    finish(values, outputs[(1 << d) - 1].clone(), outputs[0].clone())
}

/// Monte-Carlo permutation sampling: each of `samples` random feature orders
/// adds features one at a time and credits each with its marginal change.
/// Permutation `s` is seeded by `(seed, s)` alone.
pub fn sampled_shapley<F>(
    d: usize,
    samples: usize,
    seed: u64,
    mut value: F,
) -> Result<AttributionTable, EvalError>
where
    F: FnMut(&[bool]) -> Result<Vec<f64>, EvalError>,
{
    if samples == 0 {
        return Err(EvalError::NoSamples);
    }
    if d == 0 {
        return Err(EvalError::FeatureCount(d));
    }
    let base = value(&vec![false; d])?;
    let full = value(&vec![true; d])?;
    let n = base.len();
    let mut values = vec![vec![0.0; d]; n];
    let mut order: Vec<usize> = (0..d).collect();
    for s in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, 0x5a, s as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut present = vec![false; d];
        let mut prev = base.clone();
        for (step, &k) in order.iter().enumerate() {
            present[k] = true;
            let next = if step + 1 == d {
                full.clone()
            } else {
                value(&present)?
            };
            for i in 0..n {
                values[i][k] += next[i] - prev[i];
            }
            prev = next;
        }
    }
    let scale = 1.0 / samples as f64;
    values.iter_mut().flatten().for_each(|v| *v *= scale);
    finish(values, full, base)
}

/// Shapley attribution of a model's per-node probabilities to its input
/// features. Absent features take `baseline[k]` in every snapshot.
pub fn shapley_attribution(
    model: &Model,
    window: &LabeledWindow,
    baseline: &[f64],
    samples: usize,
    seed: u64,
) -> Result<AttributionTable, EvalError> {
    let prepared = model.prepare(window)?;
    let d = model.config.features;
    sampled_shapley(d, samples, seed, |present| {
        let masked = model.mask_features(&prepared, present, baseline)?;
        Ok(model.predict_prepared(&masked)?.probabilities)
    })
}
