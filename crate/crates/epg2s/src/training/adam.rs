//! Adam over the flat parameter vector, with exact state serialization so a
//! resumed run is bit-identical to an uninterrupted one.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub cfg: AdamConfig,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update in place; `theta` and `grad` must use the same flattening
    /// order the optimizer was sized for.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        assert_eq!(theta.len(), self.m.len(), "parameter count changed");
        assert_eq!(grad.len(), self.m.len(), "gradient count changed");
        self.t += 1;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bias1 = 1.0 - b1.powi(self.t as i32);
        let bias2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            theta[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 32 + 8 + 16 * self.m.len());
        for f in [self.cfg.lr, self.cfg.beta1, self.cfg.beta2, self.cfg.eps] {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.m.len() as u64).to_le_bytes());
        for &x in self.m.iter().chain(self.v.iter()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let need_header = 4 * 8 + 8 + 8;
        if bytes.len() < need_header {
            return Err(Error::Value("optimizer state is truncated".into()));
        }
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let cfg = AdamConfig {
            lr: f64_at(0),
            beta1: f64_at(8),
            beta2: f64_at(16),
            eps: f64_at(24),
        };
        let t = u64::from_le_bytes(bytes[32..40].try_into().unwrap());
        let n = u64::from_le_bytes(bytes[40..48].try_into().unwrap()) as usize;
        if bytes.len() != need_header + 16 * n {
            return Err(Error::Value(format!(
                "optimizer state is {} bytes, expected {}",
                bytes.len(),
                need_header + 16 * n
            )));
        }
        let mut m = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            m.push(f64_at(48 + 8 * i));
        }
        for i in 0..n {
            v.push(f64_at(48 + 8 * (n + i)));
        }
        Ok(Self { cfg, t, m, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_step_matches_hand_computation() {
        // with zero state, m_hat = g and v_hat = g^2 exactly after bias
        // correction, so the first update is -lr * g / (|g| + eps)
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(3, cfg);
        let mut theta = vec![1.0, -2.0, 0.5];
        let grad = vec![0.3, -0.7, 0.0];
        adam.step(&mut theta, &grad);
        assert_abs_diff_eq!(theta[0], 1.0 - 0.1 * 0.3 / (0.3 + 1e-8), epsilon = 1e-12);
        assert_abs_diff_eq!(theta[1], -2.0 + 0.1 * 0.7 / (0.7 + 1e-8), epsilon = 1e-12);
        assert_abs_diff_eq!(theta[2], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn second_step_matches_hand_computation() {
        let cfg = AdamConfig::default();
        let mut adam = Adam::new(1, cfg);
        let mut theta = vec![0.0];
        adam.step(&mut theta, &[1.0]);
        adam.step(&mut theta, &[2.0]);
        // recompute analytically
        let m2 = 0.9 * 0.1 + 0.1 * 2.0;
        let v2 = 0.999 * 0.001 + 0.001 * 4.0;
        let m_hat = m2 / (1.0 - 0.9f64.powi(2));
        let v_hat = v2 / (1.0 - 0.999f64.powi(2));
        let step1 = 1e-4 * 1.0 / (1.0 + 1e-8);
        let expected = -step1 - 1e-4 * m_hat / (v_hat.sqrt() + 1e-8);
        assert_abs_diff_eq!(theta[0], expected, epsilon = 1e-15);
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        let mut adam = Adam::new(5, AdamConfig::default());
        let mut theta = vec![0.1; 5];
        adam.step(&mut theta, &[0.5, -0.2, 0.0, 1.0, -1.0]);
        adam.step(&mut theta, &[0.1, 0.2, -0.3, 0.4, 0.5]);
        let bytes = adam.to_bytes();
        let mut restored = Adam::from_bytes(&bytes).unwrap();
        assert_eq!(restored.t, adam.t);

        let mut a = theta.clone();
        let mut b = theta.clone();
        let g = vec![0.3, -0.1, 0.7, 0.0, -0.4];
        adam.step(&mut a, &g);
        restored.step(&mut b, &g);
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_state_is_rejected() {
        let adam = Adam::new(4, AdamConfig::default());
        let mut bytes = adam.to_bytes();
        bytes.truncate(bytes.len() - 1);
        assert!(Adam::from_bytes(&bytes).is_err());
    }
}
