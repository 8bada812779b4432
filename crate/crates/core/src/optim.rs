//! Adam with bias correction, and the validation-plateau learning-rate rule.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eta: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { alpha: 0.001, beta1: 0.9, beta2: 0.999, eta: 1e-7 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidHyperparameter { name: "alpha", reason: "must be positive".into() });
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidHyperparameter { name, reason: format!("{b} is outside [0, 1)") });
            }
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidHyperparameter { name: "eta", reason: "must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    /// Current learning rate; starts at `config.alpha`, only the plateau rule lowers it.
    pub alpha: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    initialized: bool,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self { alpha: config.alpha, config, step: 0, m: Vec::new(), v: Vec::new(), initialized: false }
    }

    /// Zeroes both moment buffers for parameters of the given shapes.
    pub fn initialize(&mut self, shapes: &[Vec<usize>]) {
        self.m = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        self.v = self.m.clone();
        self.step = 0;
        self.initialized = true;
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.v
    }

    /// One Adam update over every parameter, in order.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if !self.initialized {
            return Err(Error::Usage("adam step on an uninitialized state".into()));
        }
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::mismatch(format!(
                "adam state holds {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != self.m[i].shape() || g.shape() != self.m[i].shape() {
                return Err(Error::mismatch(format!(
                    "adam tensor {i}: param {:?}, grad {:?}, state {:?}",
                    p.shape(),
                    g.shape(),
                    self.m[i].shape()
                )));
            }
        }
        self.step += 1;
        let AdamConfig { beta1, beta2, eta, .. } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let alpha = self.alpha;
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((theta, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *theta -= alpha * m_hat / (v_hat.sqrt() + eta);
            }
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without a
/// strict improvement in validation loss; the stall counter then restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauState {
    pub best_loss: f64,
    pub stall_count: usize,
    pub factor: f64,
    pub patience: usize,
    reductions: usize,
}

impl Default for PlateauState {
    fn default() -> Self {
        Self::new(0.8, 5).expect("default plateau settings are valid")
    }
}

impl PlateauState {
    pub fn new(factor: f64, patience: usize) -> Result<Self> {
        if !(factor > 0.0 && factor < 1.0) {
            return Err(Error::InvalidHyperparameter { name: "reduce_factor", reason: format!("{factor} is outside (0, 1)") });
        }
        if patience == 0 {
            return Err(Error::InvalidHyperparameter { name: "patience", reason: "must be at least 1".into() });
        }
        Ok(Self { best_loss: f64::INFINITY, stall_count: 0, factor, patience, reductions: 0 })
    }

    /// Number of reductions so far.
    pub fn reductions(&self) -> usize {
        self.reductions
    }

    /// Returns true when this call lowered the learning rate.
    pub fn update(&mut self, val_loss: f64, adam: &mut AdamState) -> bool {
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.stall_count = 0;
            return false;
        }
        self.stall_count += 1;
        if self.stall_count >= self.patience {
            adam.alpha *= self.factor;
            self.stall_count = 0;
            self.reductions += 1;
            return true;
        }
        false
    }
}
