//! AdamW with decoupled weight decay and the step-wise learning-rate
//! schedule (1/10 at 60% and 80% of the stage's iterations).

use crate::toynet::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Fractions of the stage at which the learning rate drops by 1/10.
    pub milestones: (f64, f64),
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            milestones: (0.6, 0.8),
        }
    }
}

/// Learning rate at 1-based `step` of `total` steps.
pub fn lr_at(cfg: &OptimConfig, step: usize, total: usize) -> f64 {
    let progress = (step.saturating_sub(1)) as f64 / total.max(1) as f64;
    if progress < cfg.milestones.0 {
        cfg.lr
    } else if progress < cfg.milestones.1 {
        cfg.lr * 0.1
    } else {
        cfg.lr * 0.01
    }
}

/// First- and second-moment state per parameter tensor, in canonical order.
pub struct AdamW {
    cfg: OptimConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: usize,
    skipped: usize,
}

impl AdamW {
    pub fn new(cfg: OptimConfig, params: &ModelParams) -> Self {
        let sizes: Vec<(usize, usize)> = params
            .tensors()
            .iter()
            .map(|(_, t)| (t.weight.len(), t.bias.len()))
            .collect();
        let mut m = Vec::new();
        let mut v = Vec::new();
        for (wl, bl) in sizes {
            m.push(vec![0.0; wl]);
            m.push(vec![0.0; bl]);
            v.push(vec![0.0; wl]);
            v.push(vec![0.0; bl]);
        }
        Self {
            cfg,
            m,
            v,
            step: 0,
            skipped: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn skipped_count(&self) -> usize {
        self.skipped
    }

    /// One update. `grads` holds (weight grad, bias grad) per tensor in
    /// canonical order; a non-finite gradient anywhere skips the whole step.
    pub fn step(&mut self, params: &mut ModelParams, grads: &[(Vec<f64>, Vec<f64>)], lr: f64) {
        let finite = grads
            .iter()
            .all(|(w, b)| w.iter().chain(b).all(|g| g.is_finite()));
        if !finite {
            self.skipped += 1;
            return;
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.cfg.beta1.powf(t);
        let bc2 = 1.0 - self.cfg.beta2.powf(t);
        let cfg = self.cfg;
        for (ti, (_, tensor)) in params.tensors_mut().into_iter().enumerate() {
            let (gw, gb) = &grads[ti];
            update_slice(
                &mut tensor.weight,
                gw,
                &mut self.m[2 * ti],
                &mut self.v[2 * ti],
                &cfg,
                lr,
                bc1,
                bc2,
                true,
            );
            update_slice(
                &mut tensor.bias,
                gb,
                &mut self.m[2 * ti + 1],
                &mut self.v[2 * ti + 1],
                &cfg,
                lr,
                bc1,
                bc2,
                false, // no decay on biases
            );
        }
    }

    /// Moment state as (m, v) pairs for checkpointing, canonical order.
    pub fn state(&self) -> (&[Vec<f64>], &[Vec<f64>], usize) {
        (&self.m, &self.v, self.step)
    }

    pub fn restore(&mut self, m: Vec<Vec<f64>>, v: Vec<Vec<f64>>, step: usize) {
        self.m = m;
        self.v = v;
        self.step = step;
    }
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &OptimConfig,
    lr: f64,
    bc1: f64,
    bc2: f64,
    decay: bool,
) {
    for i in 0..p.len() {
        if decay && cfg.weight_decay != 0.0 {
            p[i] -= lr * cfg.weight_decay * p[i];
        }
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toynet::model::{ModelParams, NetWidths};

    fn tiny_params() -> ModelParams {
        ModelParams::init(
            NetWidths {
                encoder: [2, 2, 2],
                low_level: 2,
                head: 2,
            },
            7,
        )
    }

    fn zero_grads(params: &ModelParams) -> Vec<(Vec<f64>, Vec<f64>)> {
        params
            .tensors()
            .iter()
            .map(|(_, t)| (vec![0.0; t.weight.len()], vec![0.0; t.bias.len()]))
            .collect()
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let mut params = tiny_params();
        let w0 = params.stem_main.weight[0];
        let mut grads = zero_grads(&params);
        let g = 0.5f64;
        grads[0].0[0] = g;
        let cfg = OptimConfig::default();
        let mut opt = AdamW::new(cfg, &params);
        let lr = 1e-4;
        opt.step(&mut params, &grads, lr);
        // Hand computation of one AdamW step.
        let after_decay = w0 - lr * cfg.weight_decay * w0;
        let m = (1.0 - cfg.beta1) * g;
        let v = (1.0 - cfg.beta2) * g * g;
        let m_hat = m / (1.0 - cfg.beta1);
        let v_hat = v / (1.0 - cfg.beta2);
        let expect = after_decay - lr * m_hat / (v_hat.sqrt() + cfg.eps);
        assert!(
            (params.stem_main.weight[0] - expect).abs() < 1e-12,
            "{} vs {expect}",
            params.stem_main.weight[0]
        );
    }

    #[test]
    fn zero_gradients_and_zero_decay_leave_params_unchanged() {
        let mut params = tiny_params();
        let before = params.clone();
        let cfg = OptimConfig {
            weight_decay: 0.0,
            ..OptimConfig::default()
        };
        let mut opt = AdamW::new(cfg, &params);
        let grads = zero_grads(&params);
        opt.step(&mut params, &grads, 1e-4);
        assert_eq!(params, before);
    }

    #[test]
    fn nan_gradient_skips_step() {
        let mut params = tiny_params();
        let before = params.clone();
        let mut grads = zero_grads(&params);
        grads[3].0[1] = f64::NAN;
        let mut opt = AdamW::new(OptimConfig::default(), &params);
        opt.step(&mut params, &grads, 1e-4);
        assert_eq!(params, before);
        assert_eq!(opt.skipped_count(), 1);
        assert_eq!(opt.step_count(), 0);
    }

    #[test]
    fn schedule_hits_all_three_rates() {
        let cfg = OptimConfig::default();
        let total = 1000;
        let (full, tenth, hundredth) = (cfg.lr, cfg.lr * 0.1, cfg.lr * 0.01);
        assert_eq!(lr_at(&cfg, 1, total), full);
        assert_eq!(lr_at(&cfg, 600, total), full); // progress 0.599
        assert_eq!(lr_at(&cfg, 601, total), tenth); // progress 0.600
        assert_eq!(lr_at(&cfg, 800, total), tenth);
        assert_eq!(lr_at(&cfg, 801, total), hundredth);
        assert_eq!(lr_at(&cfg, 1000, total), hundredth);
        let rates: std::collections::BTreeSet<u64> = (1..=total)
            .map(|s| lr_at(&cfg, s, total).to_bits())
            .collect();
        assert_eq!(rates.len(), 3);
    }
}
