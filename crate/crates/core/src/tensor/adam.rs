use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{Error, Result};

/// Adam hyper-parameters. Weight decay is decoupled (AdamW style).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-5,
        }
    }
}

/// Moment buffers for every parameter of one [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros = || params.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        AdamState {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected update using the gradients stored in
    /// `params`. Parameters without a gradient buffer are treated as having a
    /// zero gradient.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.first.len() {
            return Err(Error::input("optimizer state was built for another parameter set"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((tensor, m), v) in params
            .tensors_mut()
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            if m.len() != tensor.len() {
                return Err(Error::shape("moment buffer does not match parameter"));
            }
            let grad = tensor.grad().map(<[f64]>::to_vec);
            let data = tensor.data_mut();
            for k in 0..data.len() {
                let g = grad.as_ref().map_or(0.0, |g| g[k]);
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                data[k] -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * data[k]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn single(value: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::vector(&[value])).unwrap();
        p
    }

    fn no_decay() -> AdamConfig {
        AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut p = single(1.5);
        p.get_mut("x").unwrap().accumulate_grad(&[0.0]).unwrap();
        let mut state = AdamState::new(no_decay(), &p);
        state.step(&mut p).unwrap();
        assert_eq!(p.get("x").unwrap().data(), &[1.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient_sign() {
        for g in [3.0, -0.02] {
            let mut p = single(0.0);
            p.get_mut("x").unwrap().accumulate_grad(&[g]).unwrap();
            let cfg = no_decay();
            let mut state = AdamState::new(cfg, &p);
            state.step(&mut p).unwrap();
            let delta = p.get("x").unwrap().data()[0];
            assert!((delta + cfg.lr * g.signum()).abs() < 1e-6, "delta {delta}");
        }
    }

    #[test]
    fn three_steps_on_square_decrease_objective() {
        let mut p = single(2.0);
        let mut state = AdamState::new(no_decay(), &p);
        let f = |x: f64| x * x;
        let mut prev = f(2.0);
        for _ in 0..3 {
            p.zero_grads();
            let x = p.get("x").unwrap().data()[0];
            p.get_mut("x").unwrap().accumulate_grad(&[2.0 * x]).unwrap();
            state.step(&mut p).unwrap();
            let now = f(p.get("x").unwrap().data()[0]);
            assert!(now < prev);
            prev = now;
        }
        assert_eq!(state.steps_taken(), 3);
    }

    #[test]
    fn decoupled_weight_decay_shrinks_without_gradient() {
        let mut p = single(1.0);
        let cfg = AdamConfig {
            weight_decay: 0.1,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(cfg, &p);
        state.step(&mut p).unwrap();
        let x = p.get("x").unwrap().data()[0];
        assert!((x - (1.0 - cfg.lr * 0.1)).abs() < 1e-15);
    }
}
