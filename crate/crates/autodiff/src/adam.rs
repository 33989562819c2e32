use crate::error::{AutodiffError, Result};
use crate::params::ParamStore;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments for every parameter of one store, with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(config: AdamConfig, store: &ParamStore<F>) -> Self {
        let zeros = |id| vec![F::zero(); store.get(id).len()];
        AdamState {
            config,
            step: 0,
            m: store.ids().map(zeros).collect(),
            v: store.ids().map(zeros).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update using the store's accumulated gradients.
    pub fn step(&mut self, store: &mut ParamStore<F>) -> Result<()> {
        if store.len() != self.m.len() {
            return Err(AutodiffError::InvalidArgument {
                op: "adam_step",
                msg: format!("state tracks {} tensors, store has {}", self.m.len(), store.len()),
            });
        }
        self.step += 1;
        let c = self.config;
        let (b1, b2) = (F::of(c.beta1), F::of(c.beta2));
        let bc1 = F::one() - F::of(c.beta1.powi(self.step as i32));
        let bc2 = F::one() - F::of(c.beta2.powi(self.step as i32));
        let (lr, eps) = (F::of(c.lr), F::of(c.eps));
        for i in 0..store.len() {
            let (param, grad) = store.value_and_grad_mut(i);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            if m.len() != param.len() {
                return Err(AutodiffError::InvalidArgument {
                    op: "adam_step",
                    msg: format!("moment length {} vs parameter length {}", m.len(), param.len()),
                });
            }
            for j in 0..param.len() {
                let g = grad[j];
                m[j] = b1 * m[j] + (F::one() - b1) * g;
                v[j] = b2 * v[j] + (F::one() - b2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                param[j] = param[j] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
