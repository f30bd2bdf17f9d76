//! Adam with L2 weight decay folded into the gradient.
//!
//! ```text
//! g' = g + wd * θ
//! m  = β1 m + (1 - β1) g'
//! v  = β2 v + (1 - β2) g'²
//! θ -= lr * (m / (1 - β1^t)) / (sqrt(v / (1 - β2^t)) + eps)
//! ```

use super::model::{Layer, RgcnParams};
use super::RgcnError;

#[derive(Debug, Clone, Copy, PartialEq)]
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
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

/// Layers excluded from updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FreezePlan {
    pub layer1: bool,
    pub layer2: bool,
}

impl FreezePlan {
    pub fn new(layer1: bool, layer2: bool) -> Self {
        FreezePlan { layer1, layer2 }
    }

    pub fn is_frozen(&self, layer: Layer) -> bool {
        match layer {
            Layer::Input => self.layer1,
            Layer::Output => self.layer2,
        }
    }

    /// Parses `layer1`, `layer2`, `layer1,layer2`, `none` or an empty string.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let mut plan = FreezePlan::default();
        for part in spec
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty() && *s != "none")
        {
            match part {
                "layer1" => plan.layer1 = true,
                "layer2" => plan.layer2 = true,
                other => {
                    return Err(format!(
                        "unknown layer `{other}` (expected layer1 or layer2)"
                    ))
                }
            }
        }
        Ok(plan)
    }

    /// Zeroes the gradient blocks of frozen layers.
    pub fn apply(&self, grads: &mut RgcnParams) {
        for (layer, m) in grads.blocks_mut() {
            if self.is_frozen(layer) {
                m.fill(0.0);
            }
        }
    }
}

/// Moment buffers and step counter, one buffer per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &RgcnParams) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .blocks()
            .map(|(_, m)| vec![0.0; m.as_slice().len()])
            .collect();
        AdamState {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    /// Applies one update to every block not frozen by `freeze`. Frozen
    /// blocks are left bitwise untouched, weight decay included.
    pub fn step(
        &mut self,
        params: &mut RgcnParams,
        grads: &RgcnParams,
        freeze: FreezePlan,
    ) -> Result<(), RgcnError> {
        let shapes_match =
            params.blocks().count() == self.first.len()
                && params.blocks().zip(grads.blocks()).zip(&self.first).all(
                    |(((_, p), (_, g)), m)| p.shape() == g.shape() && p.as_slice().len() == m.len(),
                );
        if !shapes_match {
            return Err(RgcnError::Shape(
                "optimizer state does not match parameters".into(),
            ));
        }
        self.step += 1;
        let t = self.step;
        for ((((layer, p), (_, g)), m), v) in params
            .blocks_mut()
            .zip(grads.blocks())
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            if freeze.is_frozen(layer) {
                continue;
            }
            adam_update(p.as_mut_slice(), g.as_slice(), m, v, &self.config, t);
        }
        Ok(())
    }
}

/// Single Adam update of a flat parameter slice at step `t` (1-based).
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    cfg: &AdamConfig,
    t: u64,
) {
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..param.len() {
        let g = grad[i] + cfg.weight_decay * param[i];
        first[i] = cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g;
        second[i] = cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = first[i] / bc1;
        let v_hat = second[i] / bc2;
        param[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}
