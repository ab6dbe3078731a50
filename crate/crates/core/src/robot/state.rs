use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::ik::{self, IkConfig};
use super::kinematics::wrist_frame;
use super::spec::{RobotSpec, IK_DOF};
use crate::error::{Error, Result};
use crate::geometry::{Frame, RotVec, Transform, Vec3};

/// Per-step wrist displacement limits.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ActionLimits {
    /// Max ‖d_pos‖ per step, metres.
    pub pos_step: f64,
    /// Max ‖d_rot‖ per step, radians.
    pub rot_step: f64,
}

impl Default for ActionLimits {
    fn default() -> Self {
        ActionLimits {
            pos_step: 0.02,
            rot_step: 0.05,
        }
    }
}

/// A (6 + D) command: world-frame wrist displacement plus absolute effector
/// joint targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Action {
    pub d_pos: Vec3,
    pub d_rot: RotVec,
    pub effector_targets: Vec<f64>,
}

impl Action {
    pub fn zero(effector_dof: usize) -> Self {
        Action {
            d_pos: Vec3::ZERO,
            d_rot: RotVec::IDENTITY,
            effector_targets: vec![0.0; effector_dof],
        }
    }

    pub fn dim(&self) -> usize {
        6 + self.effector_targets.len()
    }

    pub fn from_slice(v: &[f64]) -> Result<Action> {
        if v.len() < 6 {
            return Err(Error::DimensionMismatch {
                what: "action",
                expected: 6,
                got: v.len(),
            });
        }
        Ok(Action {
            d_pos: Vec3::new(v[0], v[1], v[2]),
            d_rot: RotVec::new(v[3], v[4], v[5]),
            effector_targets: v[6..].to_vec(),
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend(self.d_pos.to_array());
        out.extend(self.d_rot.0.to_array());
        out.extend_from_slice(&self.effector_targets);
        out
    }

    /// Displacements scaled to the step limits, effector targets clamped to
    /// the joint limits.
    pub fn clamped(&self, spec: &RobotSpec, limits: &ActionLimits) -> Action {
        let eff = spec.effector_limits();
        Action {
            d_pos: self.d_pos.clamp_norm(limits.pos_step),
            d_rot: RotVec(self.d_rot.0.clamp_norm(limits.rot_step)),
            effector_targets: self
                .effector_targets
                .iter()
                .zip(&eff)
                .map(|(v, l)| l.clamp(*v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    /// World pose of the base at zero base joints.
    pub anchor: Transform,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
    /// Last executed (clamped) action as a (6 + D) vector.
    pub prev_action: Vec<f64>,
    pub wrist_pose: Transform,
    /// Set when the last IK solve ended with more than 1 mm residual.
    pub ik_warning: bool,
}

impl RobotState {
    pub fn at_rest(spec: &RobotSpec, anchor: Transform, q: Vec<f64>) -> Result<RobotState> {
        let wrist = wrist_frame(spec, &anchor, &q)?;
        let n = spec.joint_count();
        Ok(RobotState {
            anchor,
            q,
            qdot: vec![0.0; n],
            qddot: vec![0.0; n],
            prev_action: vec![0.0; spec.action_dim()],
            wrist_pose: wrist.to_transform(),
            ik_warning: false,
        })
    }
}

/// Options for [`apply_action`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub limits: ActionLimits,
    pub ik: IkConfig,
    /// Freeze the two base joints.
    pub fixed_base: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            limits: ActionLimits::default(),
            ik: IkConfig::default(),
            fixed_base: false,
        }
    }
}

/// Advances the robot by one control step of `dt` seconds.
///
/// The wrist target is the current wrist translated by the clamped `d_pos`
/// and left-rotated by the clamped `d_rot`. IK turns it into base/arm joint
/// targets. All joints then move toward their targets subject to their
/// velocity limits: base and arm joints share one scale factor so the wrist
/// keeps its commanded direction; effector joints are limited individually.
pub fn apply_action(
    spec: &RobotSpec,
    state: &RobotState,
    action: &Action,
    dt: f64,
    opts: &StepOptions,
) -> Result<RobotState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("dt must be positive, got {dt}")));
    }
    if action.effector_targets.len() != spec.effector_dof() {
        return Err(Error::DimensionMismatch {
            what: "action",
            expected: spec.action_dim(),
            got: action.dim(),
        });
    }
    let a = action.clamped(spec, &opts.limits);
    let wrist = state.wrist_pose.to_frame();
    let target = Frame::new(a.d_rot.to_matrix() * wrist.rotation, wrist.origin + a.d_pos);

    let mut active = [true; IK_DOF];
    if opts.fixed_base {
        active[0] = false;
        active[1] = false;
    }
    let solved = ik::solve(spec, &state.anchor, &state.q, &target, &active, &opts.ik)?;
    let ik_warning = solved.failed(&opts.ik);

    let limits = spec.joint_limits();
    let n = spec.joint_count();
    let mut q = state.q.clone();

    let mut scale: f64 = 1.0;
    for k in 0..IK_DOF {
        let step = (solved.q[k] - state.q[k]).abs();
        let cap = limits[k].max_velocity * dt;
        if step > cap {
            scale = scale.min(cap / step);
        }
    }
    for k in 0..IK_DOF {
        if active[k] {
            q[k] = limits[k].clamp(state.q[k] + (solved.q[k] - state.q[k]) * scale);
        }
    }
    for (i, target) in a.effector_targets.iter().enumerate() {
        let k = IK_DOF + i;
        let cap = limits[k].max_velocity * dt;
        let step = (target - state.q[k]).clamp(-cap, cap);
        q[k] = limits[k].clamp(state.q[k] + step);
    }

    let qdot: Vec<f64> = (0..n).map(|k| (q[k] - state.q[k]) / dt).collect();
    let qddot: Vec<f64> = (0..n).map(|k| (qdot[k] - state.qdot[k]) / dt).collect();
    let wrist_pose = wrist_frame(spec, &state.anchor, &q)?.to_transform();
    Ok(RobotState {
        anchor: state.anchor,
        q,
        qdot,
        qddot,
        prev_action: a.to_vec(),
        wrist_pose,
        ik_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::spec::gripper_bot;

    fn rest() -> (RobotSpec, RobotState) {
        let spec = gripper_bot();
        let state = RobotState::at_rest(&spec, Transform::IDENTITY, spec.home()).unwrap();
        (spec, state)
    }

    #[test]
    fn zero_action_keeps_joints() {
        let (spec, mut state) = rest();
        state.qdot[3] = 0.5;
        let next = apply_action(&spec, &state, &Action::zero(1), 1.0 / 30.0, &StepOptions::default()).unwrap();
        assert_eq!(next.q, state.q);
        assert!(next.qdot.iter().all(|v| *v == 0.0));
        assert!(!next.ik_warning);
    }

    #[test]
    fn effector_target_is_clamped() {
        let (spec, state) = rest();
        let mut a = Action::zero(1);
        a.effector_targets[0] = 5.0;
        let opts = StepOptions::default();
        let mut s = state;
        for _ in 0..30 {
            s = apply_action(&spec, &s, &a, 1.0 / 30.0, &opts).unwrap();
        }
        assert_eq!(s.q[9], 0.04);
        assert_eq!(s.prev_action[6], 0.04);
    }

    #[test]
    fn forward_request_uses_the_drive_joint() {
        let (spec, state) = rest();
        let mut a = Action::zero(1);
        a.d_pos = Vec3::new(0.0, 0.02, 0.0);
        let start = state.wrist_pose.translation;
        let mut s = state;
        for _ in 0..10 {
            s = apply_action(&spec, &s, &a, 1.0 / 30.0, &StepOptions::default()).unwrap();
        }
        let moved = s.wrist_pose.translation - start;
        assert!(moved.distance(Vec3::new(0.0, 0.2, 0.0)) < 1e-3, "{moved:?}");
        assert!(s.q[1] > 0.1, "drive joint {}", s.q[1]);
    }

    #[test]
    fn displacement_is_clamped_to_step_limit() {
        let (spec, state) = rest();
        let mut a = Action::zero(1);
        a.d_pos = Vec3::new(0.3, 0.0, 0.0);
        let next = apply_action(&spec, &state, &a, 1.0 / 30.0, &StepOptions::default()).unwrap();
        let moved = next.wrist_pose.translation.distance(state.wrist_pose.translation);
        assert!(moved <= 0.02 + 1e-3);
        assert!((Vec3::from_slice(&next.prev_action[..3]).norm() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dt_and_dims() {
        let (spec, state) = rest();
        assert!(apply_action(&spec, &state, &Action::zero(1), 0.0, &StepOptions::default()).is_err());
        assert!(apply_action(&spec, &state, &Action::zero(3), 0.1, &StepOptions::default()).is_err());
    }
}
