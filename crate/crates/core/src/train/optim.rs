use serde::{Deserialize, Serialize};

use crate::tnn::TnnParameters;
use crate::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const MOMENTUM: f64 = 0.9;
/// Nadam momentum-decay rate ψ of the μ_t = β₁(1 − ½·0.96^{tψ}) schedule.
const MOMENTUM_DECAY: f64 = 0.004;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Nadam,
    SgdMomentum,
}

/// Moment estimates; empty until the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    mu_product: f64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
            mu_product: 1.0,
        }
    }

    /// One update of `params` in place.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Argument(format!("learning rate must be positive, got {lr}")));
        }
        if params.len() != grads.len() {
            return Err(Error::Shape("parameter and gradient lengths differ".into()));
        }
        if self.step == 0 && self.m.is_empty() {
            self.m = vec![0.0; params.len()];
            self.v = vec![0.0; params.len()];
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape("optimizer state does not match the parameter layout".into()));
        }
        self.step += 1;
        let t = self.step as f64;
        match self.kind {
            OptimizerKind::SgdMomentum => {
                for ((p, g), b) in params.iter_mut().zip(grads).zip(&mut self.m) {
                    *b = MOMENTUM * *b + g;
                    *p -= lr * *b;
                }
            }
            OptimizerKind::Adam => {
                let bc1 = 1.0 - BETA1.powf(t);
                let bc2 = 1.0 - BETA2.powf(t);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
                }
            }
            OptimizerKind::Nadam => {
                let mu = BETA1 * (1.0 - 0.5 * 0.96f64.powf(t * MOMENTUM_DECAY));
                let mu_next = BETA1 * (1.0 - 0.5 * 0.96f64.powf((t + 1.0) * MOMENTUM_DECAY));
                self.mu_product *= mu;
                let mu_product_next = self.mu_product * mu_next;
                let bc2 = 1.0 - BETA2.powf(t);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    let denom = (*v / bc2).sqrt() + EPS;
                    *p -= lr * (1.0 - mu) / (1.0 - self.mu_product) * g / denom;
                    *p -= lr * mu_next / (1.0 - mu_product_next) * *m / denom;
                }
            }
        }
        Ok(())
    }
}

/// Applies one optimizer update to structured TNN parameters.
pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut TnnParameters,
    grads: &TnnParameters,
    lr: f64,
) -> Result<()> {
    let mut flat = params.to_flat();
    state.update(&mut flat, &grads.to_flat(), lr)?;
    params.set_flat(&flat)
}
