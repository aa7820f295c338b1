use std::f64::consts::PI;

/// One-cycle learning-rate schedule: linear warmup from
/// `max_lr / div_factor` to `max_lr` over the first `warmup_fraction` of
/// training, then cosine annealing down to `max_lr / final_div_factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneCycle {
    pub max_lr: f64,
    pub warmup_fraction: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
}

impl OneCycle {
    pub const WARMUP_FRACTION: f64 = 0.3;
    pub const DIV_FACTOR: f64 = 25.0;
    pub const FINAL_DIV_FACTOR: f64 = 1e4;

    pub fn new(max_lr: f64) -> Self {
        Self {
            max_lr,
            warmup_fraction: Self::WARMUP_FRACTION,
            div_factor: Self::DIV_FACTOR,
            final_div_factor: Self::FINAL_DIV_FACTOR,
        }
    }

    /// Learning rate at `progress` in `[0, 1]` (fraction of training done).
    pub fn lr_at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        let initial = self.max_lr / self.div_factor;
        let last = self.max_lr / self.final_div_factor;
        if p < self.warmup_fraction {
            initial + (self.max_lr - initial) * p / self.warmup_fraction
        } else {
            let q = (p - self.warmup_fraction) / (1.0 - self.warmup_fraction);
            last + (self.max_lr - last) * 0.5 * (1.0 + (PI * q).cos())
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cycle_shape() {
        let s = OneCycle::new(0.1);
        assert!((s.lr_at(0.0) - 0.004).abs() < 1e-15);
        assert!((s.lr_at(0.3) - 0.1).abs() < 1e-15);
        assert!((s.lr_at(1.0) - 1e-5).abs() < 1e-15);
        assert!((s.lr_at(0.15) - 0.052).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for i in 30..=100 {
            let lr = s.lr_at(i as f64 / 100.0);
            assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut adam = Adam::new(2, 0.9, 0.999, 1e-8);
        let mut p = [1.0, -1.0];
        adam.step(&mut p, &[3.0, -0.5], 0.01);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] + 0.99).abs() < 1e-9);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut adam = Adam::new(1, 0.9, 0.999, 1e-8);
        let mut p = [5.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            adam.step(&mut p, &g, 0.05);
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }
}
