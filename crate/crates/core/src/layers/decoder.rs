use rand_chacha::ChaCha8Rng;

use super::{BoundParams, LayerError, ParameterStore};
use crate::tensor::{Activation, Tape, Var};

pub const DECODER_HIDDEN: usize = 32;

/// `input → hidden (ReLU) → dropout → 1 (sigmoid)`, row-vector convention.
#[derive(Debug, Clone)]
pub struct Decoder {
    pub prefix: String,
    pub input: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Decoder {
    fn name(&self, part: &str) -> String {
        format!("{}.{part}", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut ChaCha8Rng) -> Result<(), LayerError> {
        store.insert_glorot(
            self.name("w1"),
            self.input,
            self.hidden,
            self.input,
            self.hidden,
            rng,
        )?;
        store.insert_zeros(self.name("b1"), 1, self.hidden)?;
        store.insert_glorot(self.name("w2"), self.hidden, 1, self.hidden, 1, rng)?;
        store.insert_zeros(self.name("b2"), 1, 1)
    }

    /// Returns an `n × 1` column of probabilities.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        x: Var,
        training: bool,
        seed: u64,
    ) -> Result<Var, LayerError> {
        let h = tape.matmul(x, params.get(&self.name("w1"))?)?;
        let h = tape.add(h, params.get(&self.name("b1"))?)?;
        let h = tape.activation(Activation::RELU, h)?;
        let h = tape.dropout(h, self.dropout, training, seed)?;
        let o = tape.matmul(h, params.get(&self.name("w2"))?)?;
        let o = tape.add(o, params.get(&self.name("b2"))?)?;
        Ok(tape.sigmoid(o)?)
    }
}
