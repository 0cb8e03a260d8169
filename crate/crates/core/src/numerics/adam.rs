//! Adam with bias correction. Moment slots line up positionally with the
//! parameter registry they were created from.

use super::tensor::Tensor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Clone)]
pub struct AdamState {
    pub lr: f64,
    step: u64,
    slots: Vec<MomentSlot>,
}

#[derive(Clone)]
pub struct MomentSlot {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(params: &[Tensor], lr: f64) -> Self {
        assert!(lr > 0.0, "learning rate must be positive");
        let slots = params
            .iter()
            .map(|p| MomentSlot { m: vec![0.0; p.numel()], v: vec![0.0; p.numel()] })
            .collect();
        AdamState { lr, step: 0, slots }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update over all parameters. Missing gradients are
    /// treated as zero. Does not clear gradients; the caller owns that.
    pub fn step(&mut self, params: &[Tensor]) {
        assert_eq!(params.len(), self.slots.len(), "optimizer/param registry mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        for (p, slot) in params.iter().zip(self.slots.iter_mut()) {
            assert_eq!(slot.m.len(), p.numel(), "moment slot shape mismatch");
            let grad = p.cloned_grad();
            let g = |i: usize| grad.as_ref().map_or(0.0, |g| g[i]);
            let mut data = p.data_mut();
            for i in 0..data.len() {
                let gi = g(i);
                slot.m[i] = BETA1 * slot.m[i] + (1.0 - BETA1) * gi;
                slot.v[i] = BETA2 * slot.v[i] + (1.0 - BETA2) * gi * gi;
                let m_hat = slot.m[i] / bc1;
                let v_hat = slot.v[i] / bc2;
                data[i] -= self.lr * m_hat / (v_hat.sqrt() + EPSILON);
            }
        }
    }

    pub fn slots(&self) -> &[MomentSlot] {
        &self.slots
    }

    pub fn from_parts(lr: f64, step: u64, slots: Vec<MomentSlot>) -> Self {
        AdamState { lr, step, slots }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tape::Tape;

    #[test]
    fn zero_grad_leaves_params_unchanged() {
        let p = Tensor::param(vec![2], vec![1.5, -0.5]);
        let mut opt = AdamState::new(std::slice::from_ref(&p), 0.001);
        opt.step(std::slice::from_ref(&p));
        assert_eq!(p.to_vec(), vec![1.5, -0.5]);
    }

    #[test]
    fn first_step_moves_by_roughly_lr() {
        // p=1, g=1: m_hat=1, v_hat=1 → update = lr/(1+eps)
        let p = Tensor::param(vec![1], vec![1.0]);
        p.accumulate_grad(&[1.0]);
        let mut opt = AdamState::new(std::slice::from_ref(&p), 0.001);
        opt.step(std::slice::from_ref(&p));
        let expected = 1.0 - 0.001 * 1.0 / (1.0 + EPSILON);
        assert!((p.to_vec()[0] - expected).abs() < 1e-15);
        assert!((p.to_vec()[0] - 0.999).abs() < 1e-9);
    }

    #[test]
    fn descends_a_convex_quadratic() {
        // f(p) = p^2 from p = 5
        let p = Tensor::param(vec![1], vec![5.0]);
        let mut opt = AdamState::new(std::slice::from_ref(&p), 0.05);
        for _ in 0..100 {
            let tape = Tape::new();
            let loss = tape.mul(&p, &p);
            tape.backward(&tape.sum(&loss)).unwrap();
            opt.step(std::slice::from_ref(&p));
            p.zero_grad();
        }
        assert!(p.to_vec()[0].abs() < 5.0);
    }
}
