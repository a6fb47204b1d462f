use std::collections::BTreeMap;

use super::{DenseMatrix, Gradients, TensorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates per parameter, created lazily on first update.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: BTreeMap<String, DenseMatrix>,
    second: BTreeMap<String, DenseMatrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update to every parameter that has a gradient.
    pub fn update(
        &mut self,
        params: &mut BTreeMap<String, DenseMatrix>,
        grads: &Gradients,
    ) -> Result<(), TensorError> {
        for (name, g) in grads.iter() {
            let p = params
                .get(name)
                .ok_or_else(|| TensorError::UnknownParameter(name.clone()))?;
            if p.shape() != g.shape() {
                return Err(TensorError::shape("adam_step", p.shape(), g.shape()));
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (name, g) in grads.iter() {
            let p = params.get_mut(name).expect("checked above");
            let m = self
                .first
                .entry(name.clone())
                .or_insert_with(|| DenseMatrix::zeros(g.rows(), g.cols()));
            let v = self
                .second
                .entry(name.clone())
                .or_insert_with(|| DenseMatrix::zeros(g.rows(), g.cols()));
            let iter = p
                .values_mut()
                .iter_mut()
                .zip(m.values_mut().iter_mut())
                .zip(v.values_mut().iter_mut())
                .zip(g.values());
            for (((w, m), v), &gr) in iter {
                *m = beta1 * *m + (1.0 - beta1) * gr;
                *v = beta2 * *v + (1.0 - beta2) * gr * gr;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    fn single(name: &str, v: f64) -> BTreeMap<String, DenseMatrix> {
        BTreeMap::from([(name.to_string(), DenseMatrix::scalar(v))])
    }

    fn grad_of(
        params: &BTreeMap<String, DenseMatrix>,
        f: impl Fn(&mut Tape, crate::tensor::Var) -> crate::tensor::Var,
    ) -> Gradients {
        let mut tape = Tape::new();
        let w = tape.param("w", params["w"].clone());
        let loss = f(&mut tape, w);
        tape.backward(loss).unwrap()
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut params = single("w", 1.5);
        let mut state = AdamState::new(AdamConfig::default());
        let grads = grad_of(&params, |t, w| {
            let z = t.affine(w, 0.0, 0.0).unwrap();
            t.sum(z).unwrap()
        });
        state.update(&mut params, &grads).unwrap();
        assert_eq!(params["w"].item().unwrap(), 1.5);
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = single("w", 0.0);
        let mut state = AdamState::new(AdamConfig::default());
        let grads = grad_of(&params, |t, w| t.sum(w).unwrap());
        state.update(&mut params, &grads).unwrap();
        let w = params["w"].item().unwrap();
        assert!((w + 1e-3).abs() < 1e-10, "w = {w}");
    }

    #[test]
    fn quadratic_descends() {
        let mut params = single("w", 0.0);
        let mut state = AdamState::new(AdamConfig::default());
        for _ in 0..100 {
            let grads = grad_of(&params, |t, w| {
                let d = t.affine(w, 1.0, -2.0).unwrap();
                let sq = t.hadamard(d, d).unwrap();
                t.sum(sq).unwrap()
            });
            state.update(&mut params, &grads).unwrap();
        }
        let w = params["w"].item().unwrap();
        assert!((w - 2.0).abs() < 2.0);
        assert!(w > 0.09, "w = {w}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = BTreeMap::from([("w".to_string(), DenseMatrix::zeros(2, 2))]);
        let mut tape = Tape::new();
        let w = tape.param("w", DenseMatrix::zeros(1, 2));
        let s = tape.sum(w).unwrap();
        let grads = tape.backward(s).unwrap();
        let mut state = AdamState::new(AdamConfig::default());
        assert!(state.update(&mut params, &grads).is_err());
        assert_eq!(state.step(), 0);
    }
}
