//! Central-difference gradient checking.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use super::{ParamGrads, ParameterSet, Tape, Var};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Coordinates sampled per parameter tensor (all when the tensor is smaller).
    pub samples_per_param: usize,
    /// Magnitude below which both gradients are compared absolutely.
    pub scale_floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { eps: 1e-5, samples_per_param: 8, scale_floor: 1e-6, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Worst coordinate per parameter tensor, in parameter order.
    pub per_param: Vec<Mismatch>,
    pub coordinates: usize,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&Mismatch> {
        self.per_param.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = f64::max(f64::max(libm::fabs(analytic), libm::fabs(numeric)), floor);
    libm::fabs(analytic - numeric) / scale
}

fn evaluate<F>(forward: &F, params: &ParameterSet) -> Result<f64>
where
    F: Fn(&ParameterSet, &mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = forward(params, &mut tape)?;
    let v = tape.value(loss);
    if v.shape() != [1, 1] {
        return Err(Error::NonScalarLoss(v.shape()));
    }
    Ok(v.item())
}

/// Compares the tape gradient of `forward` with central differences
/// `(f(θ + eps) − f(θ − eps)) / (2 eps)` on a random subsample of coordinates
/// of every parameter. `forward` must be deterministic; two evaluations at
/// the unperturbed point are compared bitwise.
pub fn grad_check<F>(params: &ParameterSet, forward: F, config: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&ParameterSet, &mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = forward(params, &mut tape)?;
    let base = tape.value(loss).item();
    let mut grads = ParamGrads::zeros_like(params);
    tape.backward_into(loss, &mut grads)?;
    drop(tape);
    if evaluate(&forward, params)?.to_bits() != base.to_bits() {
        return Err(Error::NonDeterministic);
    }

    let mut rng = rng::rng(config.seed, "grad_check", 0);
    let mut work = params.clone();
    let mut per_param = Vec::new();
    let mut coordinates = 0;
    for id in params.ids() {
        let len = params.get(id).len();
        let picks = index::sample(&mut rng, len, config.samples_per_param.min(len));
        let mut worst: Option<Mismatch> = None;
        for k in picks.iter() {
            let original = params.get(id).as_slice()[k];
            work.get_mut(id).as_mut_slice()[k] = original + config.eps;
            let up = evaluate(&forward, &work)?;
            work.get_mut(id).as_mut_slice()[k] = original - config.eps;
            let down = evaluate(&forward, &work)?;
            work.get_mut(id).as_mut_slice()[k] = original;
            let numeric = (up - down) / (2.0 * config.eps);
            let analytic = grads.get(id).as_slice()[k];
            let rel_error = relative_error(analytic, numeric, config.scale_floor);
            coordinates += 1;
            if worst.as_ref().is_none_or(|w| rel_error > w.rel_error) {
                worst = Some(Mismatch { param: params.name(id).into(), index: k, analytic, numeric, rel_error });
            }
        }
        per_param.extend(worst);
    }
    let max_rel_error = per_param.iter().map(|m| m.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport { max_rel_error, per_param, coordinates })
}
