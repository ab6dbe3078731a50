//! Gaussian policy over a normalized action space.
//!
//! The network outputs a mean `u` in units where ±1 is the per-step action
//! limit (wrist displacement) or the joint range edge (effector targets).
//! Sampled actions are clamped to ±1 before being mapped to physical units.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rl::mlp::Mlp;
use crate::robot::{ActionLimits, RobotSpec};

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8;
/// Lower bound applied to learned log standard deviations.
pub const MIN_LOG_STD: f64 = -5.0;

/// Affine map from normalized to physical action units.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionScale {
    pub center: Vec<f64>,
    pub half_range: Vec<f64>,
}

impl ActionScale {
    pub fn for_robot(spec: &RobotSpec, limits: &ActionLimits) -> ActionScale {
        let mut center = Vec::with_capacity(spec.action_dim());
        let mut half_range = Vec::with_capacity(spec.action_dim());
        for i in 0..6 {
            center.push(0.0);
            half_range.push(if i < 3 { limits.pos_step } else { limits.rot_step });
        }
        for l in spec.effector_limits() {
            center.push(0.5 * (l.lower + l.upper));
            half_range.push(0.5 * (l.upper - l.lower));
        }
        ActionScale { center, half_range }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Clamps to ±1 and maps to physical units.
    pub fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.center.iter().zip(&self.half_range))
            .map(|(v, (c, h))| c + h * v.clamp(-1.0, 1.0))
            .collect()
    }
}

/// Log density of `u` under a diagonal Gaussian.
pub fn log_prob(mean: &[f64], log_std: &[f64], u: &[f64]) -> f64 {
    let mut lp = 0.0;
    for ((m, s), x) in mean.iter().zip(log_std).zip(u) {
        let z = (x - m) * math::exp(-s);
        lp += -0.5 * z * z - s - HALF_LN_TAU;
    }
    lp
}

pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| s + HALF_LN_TAU + 0.5).sum()
}

/// Running per-feature mean and variance; inputs are standardized and
/// clipped before they reach the networks.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsNormalizer {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    pub clip: f64,
}

impl ObsNormalizer {
    pub fn identity(dim: usize) -> ObsNormalizer {
        ObsNormalizer {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 0.0,
            clip: 5.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merges the moments of `batch` row-major samples.
    pub fn update(&mut self, x: &[f64], batch: usize) {
        let d = self.dim();
        if batch == 0 || x.len() != batch * d {
            return;
        }
        let n = batch as f64;
        let total = self.count + n;
        for j in 0..d {
            let mut m = 0.0;
            for r in 0..batch {
                m += x[r * d + j];
            }
            m /= n;
            let mut v = 0.0;
            for r in 0..batch {
                let e = x[r * d + j] - m;
                v += e * e;
            }
            v /= n;
            let delta = m - self.mean[j];
            let m2 = self.var[j] * self.count + v * n + delta * delta * self.count * n / total;
            self.mean[j] += delta * n / total;
            self.var[j] = m2 / total;
        }
        self.count = total;
    }

    pub fn apply(&self, x: &mut [f64]) {
        let d = self.dim();
        for row in x.chunks_exact_mut(d) {
            for ((v, m), s2) in row.iter_mut().zip(&self.mean).zip(&self.var) {
                *v = ((*v - m) / math::sqrt(s2 + 1e-8)).clamp(-self.clip, self.clip);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub log_std: Vec<f64>,
    pub obs_norm: ObsNormalizer,
}

impl GaussianPolicy {
    pub fn new(net: Mlp, log_std: Vec<f64>) -> Result<GaussianPolicy> {
        if log_std.len() != net.output_dim() {
            return Err(Error::DimensionMismatch {
                what: "log std",
                expected: net.output_dim(),
                got: log_std.len(),
            });
        }
        let obs_norm = ObsNormalizer::identity(net.input_dim());
        Ok(GaussianPolicy { net, log_std, obs_norm })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    /// Log standard deviations after the lower bound.
    pub fn effective_log_std(&self) -> Vec<f64> {
        self.log_std.iter().map(|s| s.max(MIN_LOG_STD)).collect()
    }

    /// Mean action for one raw observation.
    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let mut x = obs.to_vec();
        self.obs_norm.apply(&mut x);
        self.net.forward(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::gripper_bot;

    #[test]
    fn scale_maps_unit_box_to_limits() {
        let s = ActionScale::for_robot(&gripper_bot(), &ActionLimits::default());
        assert_eq!(s.dim(), 7);
        let a = s.to_physical(&[1.0, -1.0, 3.0, 0.5, 0.0, 0.0, -1.0]);
        assert_eq!(&a[..4], &[0.02, -0.02, 0.02, 0.025]);
        assert_eq!(a[6], 0.0);
        assert_eq!(s.to_physical(&[0.0; 7])[6], 0.02);
    }

    #[test]
    fn normalizer_matches_batch_moments() {
        let mut n = ObsNormalizer::identity(2);
        let x = [1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0];
        n.update(&x[..4], 2);
        n.update(&x[4..], 2);
        assert!((n.mean[0] - 2.5).abs() < 1e-15 && (n.mean[1] - 25.0).abs() < 1e-13);
        assert!((n.var[0] - 1.25).abs() < 1e-14 && (n.var[1] - 125.0).abs() < 1e-12);
        let mut y = [2.5, 25.0 + 1000.0];
        n.apply(&mut y);
        assert_eq!(y, [0.0, 5.0]);
    }

    #[test]
    fn standard_normal_density() {
        let lp = log_prob(&[0.0], &[0.0], &[0.0]);
        assert!((lp + HALF_LN_TAU).abs() < 1e-15);
        let lp = log_prob(&[1.0, 0.0], &[math::ln(2.0), 0.0], &[3.0, 1.0]);
        let want = (-0.5 - math::ln(2.0) - HALF_LN_TAU) + (-0.5 - HALF_LN_TAU);
        assert!((lp - want).abs() < 1e-14);
        assert!((entropy(&[0.0]) - (HALF_LN_TAU + 0.5)).abs() < 1e-15);
    }
}
