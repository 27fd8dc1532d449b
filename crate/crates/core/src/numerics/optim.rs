//! Adaptive-moment (Adam) parameter updates.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::network::{Gradients, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state; the moment accumulators mirror the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState<T> {
    pub config: AdamConfig,
    pub step: u64,
    first: Gradients<T>,
    second: Gradients<T>,
}

impl<T: Real> OptState<T> {
    pub fn new(params: &NetworkParams<T>, config: AdamConfig) -> Result<Self> {
        for (name, v) in [
            ("learning rate", config.learning_rate),
            ("beta1", config.beta1),
            ("beta2", config.beta2),
            ("epsilon", config.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a positive real, got {v}")));
            }
        }
        if config.beta1 >= 1.0 || config.beta2 >= 1.0 {
            return Err(Error::Config("moment decays must be < 1".into()));
        }
        Ok(OptState {
            config,
            step: 0,
            first: Gradients::zeros_like(params),
            second: Gradients::zeros_like(params),
        })
    }

    /// One bias-corrected Adam update. Non-finite gradients are rejected
    /// before anything is modified.
    pub fn step(&mut self, params: &mut NetworkParams<T>, grads: &Gradients<T>) -> Result<()> {
        if !grads.shapes_match(params) || !self.first.shapes_match(params) {
            return Err(Error::DimensionMismatch {
                context: "optimizer shapes",
                expected: params.layers().len(),
                actual: grads.layers.len(),
            });
        }
        if let Some((layer, kind, index)) = grads.first_non_finite() {
            return Err(Error::NonFinite {
                context: "gradient".into(),
                detail: format!("layer {layer} {kind} entry {index}"),
            });
        }
        self.step += 1;
        let b1 = T::lit(self.config.beta1);
        let b2 = T::lit(self.config.beta2);
        let lr = T::lit(self.config.learning_rate);
        let eps = T::lit(self.config.epsilon);
        let t = self.step as i32;
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);

        let mut m_iter = self.first.layers.iter_mut();
        let mut v_iter = self.second.layers.iter_mut();
        let mut g_iter = grads.layers.iter();
        let update = |p: &mut T, m: &mut T, v: &mut T, g: T| {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        params.for_each_layer_mut(|weight, bias| {
            let (m, v, g) = (
                m_iter.next().expect("shape checked"),
                v_iter.next().expect("shape checked"),
                g_iter.next().expect("shape checked"),
            );
            for (((p, mi), vi), gi) in weight
                .iter_mut()
                .zip(m.weight.iter_mut())
                .zip(v.weight.iter_mut())
                .zip(g.weight.iter())
            {
                update(p, mi, vi, *gi);
            }
            for (((p, mi), vi), gi) in bias
                .iter_mut()
                .zip(m.bias.iter_mut())
                .zip(v.bias.iter_mut())
                .zip(g.bias.iter())
            {
                update(p, mi, vi, *gi);
            }
        });
        Ok(())
    }
}

/// Free-function form returning the updated values.
pub fn optimizer_step<T: Real>(
    params: &NetworkParams<T>,
    grads: &Gradients<T>,
    state: &OptState<T>,
) -> Result<(NetworkParams<T>, OptState<T>)> {
    let mut params = params.clone();
    let mut state = state.clone();
    state.step(&mut params, grads)?;
    Ok((params, state))
}
