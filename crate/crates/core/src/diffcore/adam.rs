use ndarray::{Array2, Zip};

use super::params::ParamStore;
use crate::error::{shape_err, Error, Result};

/// Adam optimiser state for one [`ParamStore`].
#[derive(Clone, Debug)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new(store: &ParamStore, learning_rate: f64) -> Self {
        let zeros: Vec<Array2<f64>> = store.values().iter().map(|v| Array2::zeros(v.raw_dim())).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every parameter in `store`.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Array2<f64>]) -> Result<()> {
        if grads.len() != store.len() || self.first.len() != store.len() {
            return Err(shape_err("adam_step", &[grads.len()], &[store.len()]));
        }
        for (p, g) in store.values().iter().zip(grads) {
            if p.dim() != g.dim() {
                let (a, b) = (p.dim(), g.dim());
                return Err(shape_err("adam_step", &[a.0, a.1], &[b.0, b.1]));
            }
            if let Some(index) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    op: "adam_step",
                    index,
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.learning_rate);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, g), m), v) in store
            .values_mut()
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            });
        }
        Ok(())
    }
}
