//! Generalized advantage estimation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Advantages and returns for one trajectory segment.
///
/// `bootstrap` is the value estimate of the state after the last step; it
/// is ignored when that step ended the episode.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::DimensionMismatch {
            what: "advantage inputs",
            expected: n,
            got: if values.len() != n { values.len() } else { dones.len() },
        });
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Normalizes to zero mean and unit standard deviation.
pub fn normalize(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = crate::math::sqrt(var) + 1e-8;
    for x in v.iter_mut() {
        *x = (*x - mean) / std;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: [f64; 4] = [1.0, 2.0, -1.0, 0.5];
    const V: [f64; 4] = [0.3, -0.2, 0.7, 0.1];

    #[test]
    fn one_step_when_gamma_is_zero() {
        let (a, ret) = compute_gae(&R, &V, &[false; 4], 9.0, 0.0, 0.95).unwrap();
        for t in 0..4 {
            assert_eq!(a[t], R[t] - V[t]);
            assert_eq!(ret[t], a[t] + V[t]);
        }
    }

    #[test]
    fn td_residual_when_lambda_is_zero() {
        let (a, _) = compute_gae(&R, &V, &[false; 4], 0.4, 0.9, 0.0).unwrap();
        assert_eq!(a[0], R[0] + 0.9 * V[1] - V[0]);
        assert_eq!(a[3], R[3] + 0.9 * 0.4 - V[3]);
    }

    #[test]
    fn suffix_sums() {
        let (a, _) = compute_gae(&R, &[0.0; 4], &[false; 4], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![2.5, 1.5, -0.5, 0.5]);
    }

    #[test]
    fn done_cuts_the_sum() {
        let (a, _) = compute_gae(&R, &[0.0; 4], &[false, true, false, false], 100.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![3.0, 2.0, 99.5, 100.5]);
        assert!(compute_gae(&R, &V[..3], &[false; 4], 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn normalized_moments() {
        let mut v = vec![1.0, 2.0, 3.0, 4.0];
        normalize(&mut v);
        let mean: f64 = v.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-15);
        let var: f64 = v.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!((var - 1.0).abs() < 1e-7);
    }
}
