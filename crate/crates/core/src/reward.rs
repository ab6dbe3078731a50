//! Keypoint-distance reward: distance penalty, approach/move action
//! shaping, grasp bonus and success bonus, gated by the grasp flag.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chamfer, RotVec, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RewardWeights {
    pub distance: f64,
    pub approach: f64,
    pub grasp: f64,
    pub move_to_goal: f64,
    pub success: f64,
    /// Mean hand-point distance below which the object counts as grasped, m.
    pub grasp_threshold: f64,
    /// Grasp-point-to-goal distance below which the task succeeds, m.
    pub success_threshold: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            distance: 1.0,
            approach: 0.2,
            grasp: 1.0,
            move_to_goal: 0.2,
            success: 2.0,
            grasp_threshold: 0.1,
            success_threshold: 0.05,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.distance, self.approach, self.grasp, self.move_to_goal, self.success];
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig("reward weights must be finite and non-negative".into()));
        }
        if !(self.grasp_threshold > 0.0 && self.success_threshold > 0.0) {
            return Err(Error::InvalidConfig("reward thresholds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RewardTerms {
    pub r_d: f64,
    pub r_a: f64,
    pub r_g: f64,
    pub r_m: f64,
    pub r_s: f64,
    pub f_g: bool,
    pub total: f64,
}

impl RewardTerms {
    /// Gated sum; `r_a` counts before the grasp, the rest after.
    pub fn combine(r_d: f64, r_a: f64, r_g: f64, r_m: f64, r_s: f64, f_g: bool) -> RewardTerms {
        let f = if f_g { 1.0 } else { 0.0 };
        RewardTerms {
            r_d,
            r_a,
            r_g,
            r_m,
            r_s,
            f_g,
            total: r_d + (1.0 - f) * r_a + f * (r_g + r_m + r_s),
        }
    }
}

/// Mean Chamfer distance from each hand point to the grasp point.
pub fn mean_hand_distance(hand_points: &[Vec3], grasp: Vec3) -> Result<f64> {
    if hand_points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut sum = 0.0;
    for h in hand_points {
        sum += chamfer(core::slice::from_ref(h), core::slice::from_ref(&grasp))?;
    }
    Ok(sum / hand_points.len() as f64)
}

pub fn grasp_flag(hand_points: &[Vec3], grasp: Vec3, grasp_threshold: f64) -> Result<bool> {
    Ok(mean_hand_distance(hand_points, grasp)? < grasp_threshold)
}

pub fn reward_distance(hand_points: &[Vec3], grasp: Vec3, goal: Vec3, weight: f64) -> Result<f64> {
    let hand = mean_hand_distance(hand_points, grasp)?;
    let goal_gap = chamfer(&[goal], &[grasp])?;
    Ok(-weight * (hand + goal_gap))
}

/// Action that points the palm at the grasp point, restores the initial palm
/// orientation and keeps the effector at its initial joints.
pub fn reference_approach_action(
    palm_position: Vec3,
    palm_rotation: RotVec,
    palm_init_rotation: RotVec,
    grasp: Vec3,
    effector_init: &[f64],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 + effector_init.len());
    out.extend((grasp - palm_position).to_array());
    out.extend(RotVec::difference(&palm_init_rotation, &palm_rotation).0.to_array());
    out.extend_from_slice(effector_init);
    out
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    crate::math::sqrt(s)
}

pub fn reward_approach(action: &[f64], reference: &[f64], weight: f64) -> Result<f64> {
    if action.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            what: "reference action",
            expected: action.len(),
            got: reference.len(),
        });
    }
    Ok(-weight * euclidean(action, reference))
}

pub fn reward_move(action: &[f64], palm: Vec3, goal: Vec3, weight: f64) -> Result<f64> {
    if action.len() < 3 {
        return Err(Error::DimensionMismatch {
            what: "action",
            expected: 3,
            got: action.len(),
        });
    }
    let want = (goal - palm).to_array();
    Ok(-weight * euclidean(&action[..3], &want))
}

pub fn reward_success(grasp: Vec3, goal: Vec3, success_threshold: f64, weight: f64) -> f64 {
    if goal.distance(grasp) < success_threshold {
        weight
    } else {
        0.0
    }
}

/// Keypoints a reward evaluation reads.
#[derive(Debug, Clone, Copy)]
pub struct RewardSnapshot<'a> {
    pub hand_points: &'a [Vec3],
    pub palm_position: Vec3,
    pub palm_rotation: RotVec,
    pub palm_init_rotation: RotVec,
    pub grasp: Vec3,
    pub goal: Vec3,
    pub effector_init: &'a [f64],
}

pub fn total_reward(s: &RewardSnapshot<'_>, action: &[f64], w: &RewardWeights) -> Result<RewardTerms> {
    let f_g = grasp_flag(s.hand_points, s.grasp, w.grasp_threshold)?;
    let r_d = reward_distance(s.hand_points, s.grasp, s.goal, w.distance)?;
    let reference = reference_approach_action(
        s.palm_position,
        s.palm_rotation,
        s.palm_init_rotation,
        s.grasp,
        s.effector_init,
    );
    let r_a = reward_approach(action, &reference, w.approach)?;
    let r_m = reward_move(action, s.palm_position, s.goal, w.move_to_goal)?;
    let r_s = reward_success(s.grasp, s.goal, w.success_threshold, w.success);
    Ok(RewardTerms::combine(r_d, r_a, w.grasp, r_m, r_s, f_g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grasp_flag_cases() {
        let g = Vec3::new(0.3, 0.1, 0.5);
        assert!(grasp_flag(&[g, g, g], g, 0.1).unwrap());
        let at = |d: f64| g + Vec3::X * d;
        assert!(!grasp_flag(&[at(0.1)], g, 0.1).unwrap());
        assert!(grasp_flag(&[at(0.05), at(0.10), at(0.12)], g, 0.1).unwrap());
        assert_eq!(grasp_flag(&[], g, 0.1), Err(Error::EmptyPointSet));
    }

    #[test]
    fn distance_term() {
        let g = Vec3::ZERO;
        assert_eq!(reward_distance(&[g], g, g, 1.0).unwrap(), 0.0);
        let r = reward_distance(&[Vec3::new(0.5, 0.0, 0.0)], g, Vec3::new(0.0, 0.3, 0.0), 1.0).unwrap();
        assert!((r + 0.8).abs() < 1e-15);
        let r2 = reward_distance(&[Vec3::new(0.5, 0.0, 0.0)], g, Vec3::new(0.0, 0.3, 0.0), 2.0).unwrap();
        assert_eq!(r2, 2.0 * r);
    }

    #[test]
    fn approach_reference() {
        let r = RotVec::new(0.1, -0.2, 0.3);
        let a = reference_approach_action(Vec3::new(0.0, -1.0, 0.5), r, r, Vec3::new(0.0, 0.0, 0.5), &[0.0]);
        assert_eq!(a, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn approach_and_move_terms() {
        let a = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let reference = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0];
        assert!((reward_approach(&a, &reference, 0.2).unwrap() + 0.4).abs() < 1e-15);
        assert!(reward_approach(&a, &reference[..6], 0.2).is_err());

        let palm = Vec3::new(0.1, 0.2, 0.3);
        let goal = Vec3::new(0.6, 0.2, 0.3);
        assert_eq!(reward_move(&[0.5, 0.0, 0.0, 9.0, 9.0, 9.0], palm, goal, 0.2).unwrap(), 0.0);
        let off = reward_move(&[1.0, 0.0, 0.0], palm, goal, 0.2).unwrap();
        assert!((off + 0.1).abs() < 1e-15);
    }

    #[test]
    fn success_term_is_strict() {
        let g = Vec3::ZERO;
        assert_eq!(reward_success(g, g, 0.05, 2.0), 2.0);
        assert_eq!(reward_success(Vec3::new(0.05, 0.0, 0.0), g, 0.05, 2.0), 0.0);
        assert_eq!(reward_success(Vec3::new(0.049, 0.0, 0.0), g, 0.05, 2.0), 2.0);
    }

    #[test]
    fn gating() {
        let t = RewardTerms::combine(-1.0, -0.5, 1.0, -0.25, 2.0, false);
        assert_eq!(t.total, -1.5);
        let t = RewardTerms::combine(-1.0, -0.5, 1.0, -0.25, 2.0, true);
        assert_eq!(t.total, 1.75);
    }

    #[test]
    fn everything_at_goal_scores_three() {
        let p = Vec3::new(0.2, 0.3, 0.4);
        let rot = RotVec::new(0.0, 0.0, 0.5);
        let snap = RewardSnapshot {
            hand_points: &[p, p, p],
            palm_position: p,
            palm_rotation: rot,
            palm_init_rotation: rot,
            grasp: p,
            goal: p,
            effector_init: &[0.0],
        };
        let t = total_reward(&snap, &[0.0; 7], &RewardWeights::default()).unwrap();
        assert!(t.f_g);
        assert_eq!(t.total, 3.0);
    }
}
