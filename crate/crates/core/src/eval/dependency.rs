use super::{AttributionTable, EvalError};

/// One scatter point: a node's value of `feature`, its attribution, and the
/// value of the companion feature used for colouring.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyRow {
    pub feature: usize,
    pub node: usize,
    pub value: f64,
    pub attribution: f64,
    pub companion: Option<usize>,
    pub companion_value: Option<f64>,
}

/// Pearson correlation, or `None` when either column has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// The other feature with the largest |correlation| to `feature`; lowest index wins ties.
pub fn companion_feature(values: &[Vec<f64>], feature: usize) -> Option<usize> {
    let column = |k: usize| values.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let target = column(feature);
    let d = values.first().map_or(0, Vec::len);
    let mut best: Option<(usize, f64)> = None;
    for k in (0..d).filter(|&k| k != feature) {
        if let Some(r) = pearson(&target, &column(k)) {
            if best.is_none_or(|(_, b)| r.abs() > b) {
                best = Some((k, r.abs()));
            }
        }
    }
    best.map(|(k, _)| k)
}

/// Dependency-plot rows for each selected feature: `nodes × selected` rows.
/// `values[i][k]` is node `i`'s value of feature `k`.
pub fn dependency_export(
    table: &AttributionTable,
    values: &[Vec<f64>],
    selected: &[usize],
) -> Result<Vec<DependencyRow>, EvalError> {
    if values.len() != table.nodes() || values.iter().any(|r| r.len() != table.features()) {
        return Err(EvalError::Model(
            "feature values do not match the attribution table".into(),
        ));
    }
    let mut rows = Vec::with_capacity(selected.len() * values.len());
    for &f in selected {
        if f >= table.features() {
            return Err(EvalError::FeatureCount(f));
        }
        let companion = companion_feature(values, f);
        for (i, row) in values.iter().enumerate() {
            rows.push(DependencyRow {
                feature: f,
                node: i,
                value: row[f],
                attribution: table.values[i][f],
                companion,
                companion_value: companion.map(|c| row[c]),
            });
        }
    }
    Ok(rows)
}
