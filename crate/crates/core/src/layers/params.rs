use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::LayerError;
use crate::tensor::{DenseMatrix, Tape, Var};

/// Named learnable matrices. Iteration order is by name, which keeps
/// initialization, optimization, and serialization deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    params: BTreeMap<String, DenseMatrix>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        value: DenseMatrix,
    ) -> Result<(), LayerError> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(LayerError::DuplicateParam(name));
        }
        self.params.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&DenseMatrix> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut DenseMatrix> {
        self.params.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &DenseMatrix)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn as_map_mut(&mut self) -> &mut BTreeMap<String, DenseMatrix> {
        &mut self.params
    }

    /// Sets every parameter to zero.
    pub fn zero_all(&mut self) {
        for m in self.params.values_mut() {
            m.values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Registers every parameter as a learnable leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> BoundParams {
        let vars = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), tape.param(k.clone(), v.clone())))
            .collect();
        BoundParams { vars }
    }

    /// Glorot-uniform matrix in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn insert_glorot(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        fan_in: usize,
        fan_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), LayerError> {
        let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        self.insert(name, DenseMatrix::from_vec(rows, cols, values)?)
    }

    pub fn insert_zeros(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
    ) -> Result<(), LayerError> {
        self.insert(name, DenseMatrix::zeros(rows, cols))
    }
}

/// Parameters registered on a particular tape.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: BTreeMap<String, Var>,
}

impl BoundParams {
    pub fn get(&self, name: &str) -> Result<Var, LayerError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| LayerError::MissingParam(name.to_string()))
    }
}
