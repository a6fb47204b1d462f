use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::dataprep::percentile;
use crate::seed;

pub const DEFAULT_RESAMPLES: usize = 1000;
/// Redraw budget for a single resample that keeps coming out single-class.
const MAX_REDRAWS: usize = 10_000;

/// Point estimate with a 95% percentile-bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Percentile bootstrap at 2.5% / 97.5%. Resample `r` draws its indices from
/// a generator seeded by `(seed, r)` alone, so results do not depend on how
/// resamples are scheduled. Resamples holding a single class are redrawn.
pub fn bootstrap_ci<M>(
    metric: M,
    scores: &[f64],
    labels: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<Interval, EvalError>
where
    M: Fn(&[f64], &[f64]) -> Result<f64, EvalError>,
{
    if scores.len() != labels.len() {
        return Err(EvalError::Length {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.len() < 2 {
        return Err(EvalError::TooFew(scores.len()));
    }
    if resamples == 0 {
        return Err(EvalError::NoSamples);
    }
    let point = metric(scores, labels)?;
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(EvalError::SingleClass);
    }
    let n = scores.len();
    let mut stats = Vec::with_capacity(resamples);
    let (mut s, mut y) = (vec![0.0; n], vec![0.0; n]);
    for r in 0..resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, 0xb0, r as u64));
        let mut attempts = 0;
        loop {
            for k in 0..n {
                let i = rng.gen_range(0..n);
                s[k] = scores[i];
                y[k] = labels[i];
            }
            if y.iter().any(|&v| v != y[0]) {
                break;
            }
            attempts += 1;
            if attempts == MAX_REDRAWS {
                return Err(EvalError::SingleClass);
            }
        }
        stats.push(metric(&s, &y)?);
    }
    stats.sort_by(f64::total_cmp);
    Ok(Interval {
        point,
        lower: percentile(&stats, 2.5),
        upper: percentile(&stats, 97.5),
    })
}
