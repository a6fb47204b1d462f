use super::{auc, bootstrap_ci, f1, EvalError, Interval};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Test-set metrics with bootstrap intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub auc: Interval,
    pub f1: Interval,
    pub threshold: f64,
    pub nodes: usize,
    pub train_seconds: Option<f64>,
    pub score_seconds: f64,
}

/// AUC and F1 with intervals from the same resample seed.
pub fn evaluate(
    scores: &[f64],
    labels: &[f64],
    threshold: f64,
    resamples: usize,
    seed: u64,
) -> Result<EvaluationReport, EvalError> {
    let start = std::time::Instant::now();
    let auc = bootstrap_ci(auc, scores, labels, resamples, seed)?;
    let f1 = bootstrap_ci(|s, y| f1(s, y, threshold), scores, labels, resamples, seed)?;
    Ok(EvaluationReport {
        auc,
        f1,
        threshold,
        nodes: scores.len(),
        train_seconds: None,
        score_seconds: start.elapsed().as_secs_f64(),
    })
}
