use serde::{Deserialize, Serialize};

use super::{Gradients, ParamSet, Real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimConfig {
    pub fn sgd(lr: f64) -> Self {
        OptimConfig {
            kind: OptimizerKind::Sgd,
            lr,
            ..Self::default()
        }
    }
}

/// SGD or Adam with bias correction. Moments are indexed like the
/// parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    pub config: OptimConfig,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> Optimizer<T> {
    pub fn new(config: OptimConfig, params: &ParamSet<T>) -> Self {
        let moments: Vec<Vec<T>> = params
            .iter()
            .map(|(_, e)| {
                if e.trainable && config.kind == OptimizerKind::Adam {
                    vec![T::zero(); e.value.numel()]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Optimizer {
            config,
            step: 0,
            m: moments.clone(),
            v: moments,
        }
    }

    /// Applies one update. Nothing changes when any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &Gradients<T>) -> Result<()> {
        for (id, entry) in params.iter() {
            if let Some(g) = grads.get(id) {
                if g.len() != entry.value.numel() {
                    return Err(Error::Shape(format!("gradient size mismatch for {}", entry.name)));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient of {}", entry.name)));
                }
            }
        }
        self.step += 1;
        let lr = T::c(self.config.lr);
        let (b1, b2) = (T::c(self.config.beta1), T::c(self.config.beta2));
        let bc1 = T::c(1.0 - self.config.beta1.powi(self.step as i32));
        let bc2 = T::c(1.0 - self.config.beta2.powi(self.step as i32));
        let eps = T::c(self.config.eps);
        let one = T::one();
        for (i, entry) in params.entries_mut().enumerate() {
            if !entry.trainable {
                continue;
            }
            let Some(g) = grads.get(super::ParamId(i)) else {
                continue;
            };
            let p = entry.value.data_mut();
            match self.config.kind {
                OptimizerKind::Sgd => {
                    for (p, &g) in p.iter_mut().zip(g) {
                        *p -= lr * g;
                    }
                }
                OptimizerKind::Adam => {
                    let (m, v) = (&mut self.m[i], &mut self.v[i]);
                    for j in 0..p.len() {
                        m[j] = b1 * m[j] + (one - b1) * g[j];
                        v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
                        let mh = m[j] / bc1;
                        let vh = v[j] / bc2;
                        p[j] -= lr * mh / (vh.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
