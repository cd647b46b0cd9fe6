use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Moments {
    first: Vec<f64>,
    second: Vec<f64>,
}

/// Per-parameter moment slots, keyed by the same names as the [`ParamSet`].
#[derive(Clone, Debug, Default)]
pub struct AdamState {
    step: u64,
    slots: BTreeMap<String, Moments>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of every parameter that has a gradient.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &BTreeMap<String, Tensor>,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - config.beta1.powf(t);
    let c2 = 1.0 - config.beta2.powf(t);
    for (name, grad) in grads {
        let param = params
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("gradient for unknown parameter {name}")))?;
        if param.shape() != grad.shape() {
            return Err(Error::dim(
                "adam_step",
                format!("{name}: {:?} vs {:?}", param.shape(), grad.shape()),
            ));
        }
        let slot = state.slots.entry(name.clone()).or_insert_with(|| Moments {
            first: vec![0.0; grad.len()],
            second: vec![0.0; grad.len()],
        });
        for (((p, g), m), v) in param
            .values_mut()
            .iter_mut()
            .zip(grad.values())
            .zip(slot.first.iter_mut())
            .zip(slot.second.iter_mut())
        {
            *m = config.beta1 * *m + (1.0 - config.beta1) * g;
            *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
        }
        if !param.all_finite() {
            return Err(Error::NonFinite { op: "adam_step" });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = ParamSet::new();
        params.insert("w", Tensor::filled(&[3], 0.5)).unwrap();
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Tensor::filled(&[3], 1.0));
        let mut state = AdamState::new();
        adam_step(&mut params, &grads, &mut state, &AdamConfig::default()).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = lr / (1 + eps)
        let expect = 0.5 - 1e-3 / (1.0 + 1e-8);
        for v in params.get("w").unwrap().values() {
            assert!((v - expect).abs() < 1e-15);
        }
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let mut params = ParamSet::new();
        let mut grads = BTreeMap::new();
        grads.insert("nope".to_string(), Tensor::zeros(&[1]));
        let err = adam_step(&mut params, &grads, &mut AdamState::new(), &AdamConfig::default());
        assert!(err.is_err());
    }
}
