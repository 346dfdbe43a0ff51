use super::param::Param;
use super::tensor::{Scalar, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Iteration-count decay: `α_t = α / (1 + decay·t)`.
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay: 0.001,
        }
    }
}

/// Moments for each parameter, matched by position in the parameter list.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<Tensor2<F>>,
    v: Vec<Tensor2<F>>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Learning rate used at step `t` (1-based).
    pub fn rate_at(&self, t: u64) -> f64 {
        self.config.lr / (1.0 + self.config.decay * t as f64)
    }

    pub fn moments(&self) -> (&[Tensor2<F>], &[Tensor2<F>]) {
        (&self.m, &self.v)
    }

    /// One update of every trainable parameter from its accumulated gradient.
    pub fn step(&mut self, params: &mut [&mut Param<F>]) {
        if self.m.is_empty() {
            for p in params.iter() {
                let (r, c) = p.value.shape();
                self.m.push(Tensor2::zeros(r, c));
                self.v.push(Tensor2::zeros(r, c));
            }
        }
        assert_eq!(self.m.len(), params.len(), "parameter set changed between steps");
        self.t += 1;
        let cfg = self.config;
        let t = self.t as i32;
        let lr = self.rate_at(self.t);
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let (b1, b2) = (F::from_f64_lossy(cfg.beta1), F::from_f64_lossy(cfg.beta2));
        let (one, eps) = (F::one(), F::from_f64_lossy(cfg.eps));
        let (inv_bc1, inv_bc2) = (F::from_f64_lossy(1.0 / bc1), F::from_f64_lossy(1.0 / bc2));
        let lr = F::from_f64_lossy(lr);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            if !p.trainable {
                continue;
            }
            let skip = p.frozen_rows * p.value.cols();
            let grad = &p.grad.data()[skip..];
            let m = &mut m.data_mut()[skip..];
            let v = &mut v.data_mut()[skip..];
            let w = &mut p.value.data_mut()[skip..];
            for i in 0..grad.len() {
                let g = grad[i];
                m[i] = b1 * m[i] + (one - b1) * g;
                v[i] = b2 * v[i] + (one - b2) * g * g;
                let m_hat = m[i] * inv_bc1;
                let v_hat = v[i] * inv_bc2;
                w[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
