//! Snapshot-level attention over the recurrent hidden states.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{BoundParams, LayerError, ParameterStore};
use crate::tensor::{Tape, Var};

/// `s(t) = a_h H(t) W_h`, `β = softmax(s)`, `H_att = Σ β(t) H(t)`.
///
/// `a_h` is stored with `capacity` columns; a window with a different
/// supra size uses its truncated or zero-padded prefix.
#[derive(Debug, Clone)]
pub struct TemporalAttention {
    pub prefix: String,
    pub capacity: usize,
    pub hidden: usize,
}

impl TemporalAttention {
    pub fn node_weights_name(&self) -> String {
        format!("{}.a_h", self.prefix)
    }

    pub fn hidden_weights_name(&self) -> String {
        format!("{}.w_h", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut ChaCha8Rng) -> Result<(), LayerError> {
        store.insert_glorot(
            self.node_weights_name(),
            1,
            self.capacity,
            self.capacity,
            1,
            rng,
        )?;
        store.insert_glorot(
            self.hidden_weights_name(),
            self.hidden,
            1,
            self.hidden,
            1,
            rng,
        )
    }

    /// Returns `(H_att, β)` with `β` a `τ × 1` column.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        hidden: &[Var],
    ) -> Result<(Var, Var), LayerError> {
        let first = *hidden.first().ok_or(LayerError::Config(
            "attention over an empty sequence".into(),
        ))?;
        let rows = tape.value(first).rows();
        let a_h = params.get(&self.node_weights_name())?;
        let w_h = params.get(&self.hidden_weights_name())?;
        let a = if tape.value(a_h).cols() == rows {
            a_h
        } else {
            tape.resize_cols(a_h, rows)?
        };
        let mut scores = Vec::with_capacity(hidden.len());
        for &h in hidden {
            let ah = tape.matmul(a, h)?;
            scores.push(tape.matmul(ah, w_h)?);
        }
        let s = tape.concat_rows(&scores)?;
        let beta = tape.segment_softmax(s, Arc::new(vec![0; hidden.len()]), 1)?;
        let mut acc: Option<Var> = None;
        for (t, &h) in hidden.iter().enumerate() {
            let b = tape.entry(beta, t, 0)?;
            let term = tape.scale_by(b, h)?;
            acc = Some(match acc {
                Some(prev) => tape.add(prev, term)?,
                None => term,
            });
        }
        Ok((acc.expect("non-empty"), beta))
    }
}
