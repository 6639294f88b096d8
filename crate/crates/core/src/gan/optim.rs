/// Adam with `f32` parameter and moment storage; arithmetic in `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    /// One update at step `t ≥ 1`.
    pub fn step(&self, params: &mut [f32], m: &mut [f32], v: &mut [f32], grad: &[f64], t: u64) {
        assert!(t >= 1, "adam steps are 1-based");
        let bc1 = 1.0 - self.beta1.powf(t as f64);
        let bc2 = 1.0 - self.beta2.powf(t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            let mi = self.beta1 * m[i] as f64 + (1.0 - self.beta1) * g;
            let vi = self.beta2 * v[i] as f64 + (1.0 - self.beta2) * g * g;
            m[i] = mi as f32;
            v[i] = vi as f32;
            if self.lr != 0.0 {
                let update = self.lr * (mi / bc1) / ((vi / bc2).sqrt() + self.eps);
                params[i] = (params[i] as f64 - update) as f32;
            }
        }
    }
}
