use super::EvalError;
use crate::model::{LabeledWindow, Model};

/// Mean temporal attention per snapshot position, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionProfile {
    pub scores: Vec<f64>,
    pub passes: usize,
}

impl AttentionProfile {
    /// `(position, score)` pairs with positions counted from 1.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.scores
            .iter()
            .enumerate()
            .map(|(t, &b)| (t + 1, b))
            .collect()
    }
}

/// Averages β over one inference pass per window. All windows must share τ.
pub fn attention_profile(
    model: &Model,
    windows: &[LabeledWindow],
) -> Result<AttentionProfile, EvalError> {
    if !model.config.architecture.has_attention() {
        return Err(EvalError::NoAttention);
    }
    if windows.is_empty() {
        return Err(EvalError::NoSamples);
    }
    let mut acc: Vec<f64> = Vec::new();
    for w in windows {
        let beta = model
            .predict(w)?
            .beta
            .expect("attention models report beta");
        if acc.is_empty() {
            acc = vec![0.0; beta.len()];
        } else if acc.len() != beta.len() {
            return Err(EvalError::Model(format!(
                "windows of length {} and {}",
                acc.len(),
                beta.len()
            )));
        }
        acc.iter_mut().zip(&beta).for_each(|(a, b)| *a += b);
    }
    let k = windows.len() as f64;
    Ok(AttentionProfile {
        scores: acc.into_iter().map(|a| a / k).collect(),
        passes: windows.len(),
    })
}
