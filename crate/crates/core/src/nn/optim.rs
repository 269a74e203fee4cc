use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp};
use crate::error::{Error, Result};

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
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam state for one network.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl Adam {
    pub fn new(mlp: &Mlp, config: AdamConfig) -> Self {
        Adam {
            config,
            m: Gradients::zeros_like(mlp),
            v: Gradients::zeros_like(mlp),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update. Fails if any parameter becomes non-finite.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) -> Result<()> {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let mut finite = true;
        for (((p, g), m), v) in mlp.params_mut().zip(grads.iter()).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            finite &= p.is_finite();
        }
        if !finite {
            return Err(Error::NonFinite {
                what: "network parameter",
                step: self.t as usize,
            });
        }
        Ok(())
    }
}

/// Five-point central difference `f'(x)` for the parameter at `k`.
fn central_difference(probe: &mut Mlp, k: usize, loss: &mut impl FnMut(&Mlp) -> f64, h: f64) -> f64 {
    let original = *probe.params_mut().nth(k).expect("parameter index in range");
    let mut at = |offset: f64| {
        *probe.params_mut().nth(k).unwrap() = original + offset;
        loss(probe)
    };
    let d = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
    *probe.params_mut().nth(k).unwrap() = original;
    d
}

/// Relative agreement required between the estimates at `h` and `h/2`
/// before a step is trusted, on top of the expected roundoff.
const STEP_AGREEMENT: f64 = 1e-7;
const MIN_STEP: f64 = 1e-7;

/// Largest relative error between `analytic` and a numerical derivative of
/// `loss` over every parameter, with denominator `max(|a|, |n|, 1e-8)`.
///
/// The numerical derivative is a five-point central difference starting at
/// step `h`. When the estimates at `h` and `h/2` disagree by more than
/// roundoff explains, the probe straddles a kink of a piecewise-linear
/// activation, so the step shrinks tenfold until they agree.
pub fn gradient_check(mlp: &Mlp, analytic: &Gradients, mut loss: impl FnMut(&Mlp) -> f64, h: f64) -> f64 {
    let reference: Vec<f64> = analytic.iter().copied().collect();
    let scale = loss(mlp).abs().max(1.0);
    let mut probe = mlp.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in reference.iter().enumerate() {
        let mut step = h;
        let numeric = loop {
            let coarse = central_difference(&mut probe, k, &mut loss, step);
            let fine = central_difference(&mut probe, k, &mut loss, step / 2.0);
            let roundoff = 10.0 * f64::EPSILON * scale / (step / 2.0);
            let agree = (coarse - fine).abs() <= STEP_AGREEMENT * coarse.abs().max(fine.abs()) + roundoff;
            if agree || step / 10.0 < MIN_STEP {
                break fine;
            }
            step /= 10.0;
        };
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}
