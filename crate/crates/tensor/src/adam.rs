use crate::error::{Result, TensorError};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for every parameter of one store.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            m: store.zeros_like(),
            v: store.zeros_like(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update.
    ///
    /// `lr_of` gives the learning rate for each parameter; `None` freezes
    /// it, leaving both the value and its moments untouched.
    pub fn step(
        &mut self,
        store: &mut ParamStore,
        grads: &[Tensor],
        lr_of: impl Fn(ParamId) -> Option<f64>,
    ) -> Result<()> {
        if grads.len() != store.len() || self.m.len() != store.len() {
            return Err(TensorError::ShapeMismatch {
                op: "adam_step",
                left: vec![store.len()],
                right: vec![grads.len()],
            });
        }
        for (id, g) in store.ids().zip(grads) {
            if g.shape() != store.get(id).shape() || self.m[id.0].shape() != g.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adam_step",
                    left: store.get(id).shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (id, g) in store.ids().zip(grads) {
            let Some(lr) = lr_of(id) else { continue };
            let m = self.m[id.0].data_mut();
            let v = self.v[id.0].data_mut();
            let p = store.get_mut(id).data_mut();
            for (((pi, mi), vi), &gi) in p.iter_mut().zip(m).zip(v).zip(g.data()) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(value: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("p", Tensor::scalar(value)).unwrap();
        s
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let mut s = one(0.0);
        let mut adam = AdamState::new(&s, AdamConfig::default());
        adam.step(&mut s, &[Tensor::scalar(0.5)], |_| Some(1e-3)).unwrap();
        // m̂ = g, v̂ = g², Δ = −lr·g/(|g| + ε)
        let expected = -1e-3 * 0.5 / (0.5 + 1e-8);
        let delta = s.get(ParamId(0)).item();
        assert!((delta - expected).abs() < 1e-15, "{delta} vs {expected}");
        assert!((delta - -9.99999986e-4).abs() < 1e-11);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = one(1.25);
        let mut adam = AdamState::new(&s, AdamConfig::default());
        for _ in 0..10 {
            adam.step(&mut s, &[Tensor::scalar(0.0)], |_| Some(1e-2)).unwrap();
        }
        assert_eq!(s.get(ParamId(0)).item(), 1.25);
    }

    #[test]
    fn first_step_sign_opposes_gradient() {
        for g in [-3.0, -1e-6, 1e-9, 2.0, 1e4] {
            let mut s = one(0.0);
            let mut adam = AdamState::new(&s, AdamConfig::default());
            adam.step(&mut s, &[Tensor::scalar(g)], |_| Some(1e-3)).unwrap();
            assert_eq!(s.get(ParamId(0)).item().signum(), -g.signum());
        }
    }

    #[test]
    fn frozen_parameters_do_not_move() {
        let mut s = one(2.0);
        let mut adam = AdamState::new(&s, AdamConfig::default());
        adam.step(&mut s, &[Tensor::scalar(1.0)], |_| None).unwrap();
        assert_eq!(s.get(ParamId(0)).item(), 2.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut s = one(0.0);
        let mut adam = AdamState::new(&s, AdamConfig::default());
        let bad = Tensor::row(vec![1.0, 2.0]).unwrap();
        assert!(adam.step(&mut s, &[bad], |_| Some(1.0)).is_err());
        assert!(adam.step(&mut s, &[], |_| Some(1.0)).is_err());
    }
}
