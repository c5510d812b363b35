use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates. One instance owns the moment
/// buffers for a fixed list of parameter tensors, addressed by slot index.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    step: i32,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    /// `sizes[i]` is the element count of parameter slot `i`.
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            first: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    /// Advance the step counter; call once before updating the slots of a step.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, slot: usize, params: &mut [T], grads: &[T]) {
        debug_assert!(self.step > 0, "begin_step not called");
        let c = &self.config;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let lr = T::lit(c.learning_rate);
        let eps = T::lit(c.epsilon);
        let bias1 = T::one() - b1.powi(self.step);
        let bias2 = T::one() - b2.powi(self.step);
        let m = &mut self.first[slot];
        let v = &mut self.second[slot];
        assert_eq!(m.len(), params.len());
        assert_eq!(grads.len(), params.len());
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = b1 * m[i] + (T::one() - b1) * g;
            v[i] = b2 * v[i] + (T::one() - b2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_nearly_sign_of_gradient() {
        let mut adam = Adam::<f64>::new(AdamConfig::default(), &[3]);
        let mut p = [1.0, -2.0, 0.5];
        let g = [0.3, -4.0, 1e-3];
        adam.begin_step();
        adam.update(0, &mut p, &g);
        for ((after, before), gi) in p.iter().zip([1.0, -2.0, 0.5]).zip(g) {
            let expect = before - 1e-3 * gi / (gi.abs() + 1e-8);
            assert!((after - expect).abs() < 1e-15);
            assert!((after - (before - 1e-3 * gi.signum())).abs() < 1e-7);
        }
    }

    #[test]
    fn second_step_follows_moment_recursion() {
        let cfg = AdamConfig::default();
        let mut adam = Adam::<f64>::new(cfg, &[1]);
        let mut p = [0.0];
        adam.begin_step();
        adam.update(0, &mut p, &[2.0]);
        adam.begin_step();
        adam.update(0, &mut p, &[-1.0]);
        let m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0;
        let v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
        let step2 = 1e-3 * (m / (1.0 - 0.81)) / ((v / (1.0 - 0.999f64.powi(2))).sqrt() + 1e-8);
        let step1 = 1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((p[0] - (-step1 - step2)).abs() < 1e-15);
    }
}
