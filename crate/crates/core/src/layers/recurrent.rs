//! LSTM and GRU cells in row-vector form (`Z W + H W + b`), each weight `D × D`.

use rand_chacha::ChaCha8Rng;

use super::{BoundParams, LayerError, ParameterStore};
use crate::tensor::{Activation, Tape, Var};

const LSTM_GATES: [&str; 4] = ["i", "f", "c", "o"];
const GRU_GATES: [&str; 3] = ["u", "r", "h"];

fn init_gates(
    prefix: &str,
    gates: &[&str],
    input: usize,
    hidden: usize,
    store: &mut ParameterStore,
    rng: &mut ChaCha8Rng,
) -> Result<(), LayerError> {
    for g in gates {
        store.insert_glorot(
            format!("{prefix}.w_{g}i"),
            input,
            hidden,
            input,
            hidden,
            rng,
        )?;
        store.insert_glorot(
            format!("{prefix}.w_{g}h"),
            hidden,
            hidden,
            hidden,
            hidden,
            rng,
        )?;
        store.insert_zeros(format!("{prefix}.b_{g}"), 1, hidden)?;
    }
    Ok(())
}

fn gate_pre(
    tape: &mut Tape,
    params: &BoundParams,
    prefix: &str,
    gate: &str,
    z: Var,
    h: Var,
) -> Result<Var, LayerError> {
    let wi = params.get(&format!("{prefix}.w_{gate}i"))?;
    let wh = params.get(&format!("{prefix}.w_{gate}h"))?;
    let b = params.get(&format!("{prefix}.b_{gate}"))?;
    let zi = tape.matmul(z, wi)?;
    let hh = tape.matmul(h, wh)?;
    let s = tape.add(zi, hh)?;
    Ok(tape.add(s, b)?)
}

#[derive(Debug, Clone)]
pub struct LstmCell {
    pub prefix: String,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn init(&self, store: &mut ParameterStore, rng: &mut ChaCha8Rng) -> Result<(), LayerError> {
        init_gates(
            &self.prefix,
            &LSTM_GATES,
            self.input,
            self.hidden,
            store,
            rng,
        )
    }

    /// One step; returns `(H, C)`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        z: Var,
        h_prev: Var,
        c_prev: Var,
    ) -> Result<(Var, Var), LayerError> {
        let p = &self.prefix;
        let i = gate_pre(tape, params, p, "i", z, h_prev)?;
        let i = tape.activation(Activation::Sigmoid, i)?;
        let f = gate_pre(tape, params, p, "f", z, h_prev)?;
        let f = tape.activation(Activation::Sigmoid, f)?;
        let cand = gate_pre(tape, params, p, "c", z, h_prev)?;
        let cand = tape.tanh(cand)?;
        let keep = tape.hadamard(f, c_prev)?;
        let write = tape.hadamard(i, cand)?;
        let c = tape.add(keep, write)?;
        let o = gate_pre(tape, params, p, "o", z, h_prev)?;
        let o = tape.activation(Activation::Sigmoid, o)?;
        let tc = tape.tanh(c)?;
        let h = tape.hadamard(o, tc)?;
        Ok((h, c))
    }
}

#[derive(Debug, Clone)]
pub struct GruCell {
    pub prefix: String,
    pub input: usize,
    pub hidden: usize,
}

impl GruCell {
    pub fn init(&self, store: &mut ParameterStore, rng: &mut ChaCha8Rng) -> Result<(), LayerError> {
        init_gates(
            &self.prefix,
            &GRU_GATES,
            self.input,
            self.hidden,
            store,
            rng,
        )
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &BoundParams,
        z: Var,
        h_prev: Var,
    ) -> Result<Var, LayerError> {
        let p = &self.prefix;
        let u = gate_pre(tape, params, p, "u", z, h_prev)?;
        let u = tape.sigmoid(u)?;
        let r = gate_pre(tape, params, p, "r", z, h_prev)?;
        let r = tape.sigmoid(r)?;
        let rh = tape.hadamard(r, h_prev)?;
        let cand = gate_pre(tape, params, p, "h", z, rh)?;
        let cand = tape.tanh(cand)?;
        let one_minus_u = tape.affine(u, -1.0, 1.0)?;
        let keep = tape.hadamard(one_minus_u, h_prev)?;
        let write = tape.hadamard(u, cand)?;
        Ok(tape.add(keep, write)?)
    }
}
