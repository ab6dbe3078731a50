//! Adaptive-moment optimizer over a flat parameter vector.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(size: usize, learning_rate: f64) -> Adam {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; size],
            v: vec![0.0; size],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update. `parts` are consecutive slices of the optimized vector
    /// with their gradients; together they must cover `size` entries.
    pub fn step(&mut self, parts: &mut [(&mut [f64], &[f64])]) {
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        let mut k = 0;
        for (params, grads) in parts.iter_mut() {
            for (p, g) in params.iter_mut().zip(grads.iter()) {
                let m = &mut self.m[k];
                let v = &mut self.v[k];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.learning_rate * (*m / c1) / (math::sqrt(*v / c2) + self.epsilon);
                k += 1;
            }
        }
        debug_assert_eq!(k, self.m.len());
    }
}

/// Scales `grads` so their joint Euclidean norm is at most `max_norm`;
/// returns the norm before scaling.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let sq: f64 = grads.iter().flat_map(|g| g.iter()).map(|v| v * v).sum();
    let norm = math::sqrt(sq);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= s;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut opt = Adam::new(2, 0.1);
        let mut p = [1.0, -1.0];
        opt.step(&mut [(&mut p[..], &[0.5, -3.0][..])]);
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 0.9).abs() < 1e-7);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut opt = Adam::new(1, 0.05);
        let mut p = [3.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0)];
            opt.step(&mut [(&mut p[..], &g[..])]);
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn clipping() {
        let mut a = [3.0];
        let mut b = [4.0];
        let n = clip_grad_norm(&mut [&mut a[..], &mut b[..]], 1.0);
        assert_eq!(n, 5.0);
        assert!((a[0] - 0.6).abs() < 1e-15 && (b[0] - 0.8).abs() < 1e-15);
    }
}
