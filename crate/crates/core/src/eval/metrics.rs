use super::EvalError;

fn check(scores: &[f64], labels: &[f64]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Length {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    if pos + labels.iter().filter(|&&y| y == 0.0).count() != labels.len() {
        return Err(EvalError::NonBinaryLabel);
    }
    Ok((pos, labels.len() - pos))
}

/// Rank-based (Mann–Whitney) AUC with average ranks for ties.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, EvalError> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean.
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as f64 * avg;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// F1 of `score >= threshold` predictions; 0 when precision or recall is undefined.
pub fn f1(scores: &[f64], labels: &[f64], threshold: f64) -> Result<f64, EvalError> {
    check(scores, labels)?;
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fne) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}
