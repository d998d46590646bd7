use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamGrads, ParameterSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.005, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::invalid("lr", alloc::format!("{} is not a non-negative number", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("adam", "moment decay rates must lie in [0, 1)"));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::invalid("eps", "must be positive"));
        }
        Ok(())
    }
}

/// Adaptive-moment optimizer with bias-corrected first and second moments.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    pub fn new(params: &ParameterSet, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let m: Vec<Vec<f64>> = params.iter().map(|(_, _, t)| alloc::vec![0.0; t.len()]).collect();
        Ok(Adam { config, v: m.clone(), m, step: 0 })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut ParameterSet, grads: &ParamGrads) {
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(c.beta1, f64::from(t));
        let bc2 = 1.0 - libm::pow(c.beta2, f64::from(t));
        for (id, g) in grads.iter() {
            let i = id.index();
            let p = params.get_mut(id).as_mut_slice();
            for (k, (&gk, pk)) in g.as_slice().iter().zip(p.iter_mut()).enumerate() {
                let m = &mut self.m[i][k];
                let v = &mut self.v[i][k];
                *m = c.beta1 * *m + (1.0 - c.beta1) * gk;
                *v = c.beta2 * *v + (1.0 - c.beta2) * gk * gk;
                let mh = *m / bc1;
                let vh = *v / bc2;
                *pk -= c.lr * mh / (libm::sqrt(vh) + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut p = ParameterSet::new();
        let id = p.push("w", Tensor::from_vec(1, 3, alloc::vec![1.0, 1.0, 1.0]).unwrap()).unwrap();
        let mut g = ParamGrads::zeros_like(&p);
        g.slot_mut(id).as_mut_slice().copy_from_slice(&[2.0, -0.5, 0.0]);
        let mut opt = Adam::new(&p, AdamConfig { lr: 0.1, ..AdamConfig::default() }).unwrap();
        opt.step(&mut p, &g);
        let w = p.get(id).as_slice();
        assert!((w[0] - 0.9).abs() < 1e-6);
        assert!((w[1] - 1.1).abs() < 1e-6);
        assert_eq!(w[2], 1.0);
    }

    #[test]
    fn zero_rate_freezes() {
        let mut p = ParameterSet::new();
        let id = p.push("w", Tensor::filled(2, 2, 0.3)).unwrap();
        let mut g = ParamGrads::zeros_like(&p);
        g.slot_mut(id).fill(1.0);
        let before = p.clone();
        let mut opt = Adam::new(&p, AdamConfig { lr: 0.0, ..AdamConfig::default() }).unwrap();
        for _ in 0..5 {
            opt.step(&mut p, &g);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = ParameterSet::new();
        let id = p.push("w", Tensor::scalar(5.0)).unwrap();
        let mut opt = Adam::new(&p, AdamConfig { lr: 0.1, ..AdamConfig::default() }).unwrap();
        let mut g = ParamGrads::zeros_like(&p);
        for _ in 0..500 {
            let w = p.get(id).item();
            g.slot_mut(id).fill(2.0 * (w - 1.5));
            opt.step(&mut p, &g);
        }
        assert!((p.get(id).item() - 1.5).abs() < 1e-2);
    }

    #[test]
    fn rejects_negative_rate() {
        let p = ParameterSet::new();
        assert!(Adam::new(&p, AdamConfig { lr: -1.0, ..AdamConfig::default() }).is_err());
    }
}
