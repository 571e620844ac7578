use std::collections::BTreeMap;

use crate::dense::Matrix;
use crate::error::{Error, Result};

use super::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to the gradient of parameters flagged for decay.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// Adam optimizer state with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    t: u64,
    moments: BTreeMap<String, (Matrix, Matrix)>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            moments: BTreeMap::new(),
        }
    }

    /// Number of completed steps.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &BTreeMap<String, Matrix>) -> Result<()> {
        for (name, param) in params.iter() {
            let g = grads
                .get(name)
                .ok_or_else(|| Error::invalid(format!("no gradient for parameter {name:?}")))?;
            if g.shape() != param.value.shape() {
                return Err(Error::shape(
                    "adam_step",
                    format!("{:?}", param.value.shape()),
                    format!("{:?}", g.shape()),
                ));
            }
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(self.t as i32);
        let bias2 = 1.0 - beta2.powi(self.t as i32);
        for (name, param) in params.iter_mut() {
            let g = &grads[name];
            let (m, v) = self.moments.entry(name.to_owned()).or_insert_with(|| {
                let (r, c) = g.shape();
                (Matrix::zeros(r, c), Matrix::zeros(r, c))
            });
            let decay = if param.decay { weight_decay } else { 0.0 };
            let moments = m.data_mut().iter_mut().zip(v.data_mut());
            for ((wk, &g), (mk, vk)) in param.value.data_mut().iter_mut().zip(g.data()).zip(moments) {
                let gk = g + decay * *wk;
                *mk = beta1 * *mk + (1.0 - beta1) * gk;
                *vk = beta2 * *vk + (1.0 - beta2) * gk * gk;
                let m_hat = *mk / bias1;
                let v_hat = *vk / bias2;
                *wk -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
