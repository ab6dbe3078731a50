use alloc::vec::Vec;

use super::spec::{Anchor, BodyPoint, Effector, JointKind, JointSpec, RobotSpec, IK_DOF};
use crate::error::{Error, Result};
use crate::geometry::{Frame, Mat3, Transform, Vec3};

/// Every frame and keypoint the rest of the crate reads off the robot.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    /// Frames of the 9 base/arm joints, taken before each joint's own motion.
    pub joint_frames: Vec<Frame>,
    /// Axis of each base/arm joint in world coordinates.
    pub joint_axes: Vec<Vec3>,
    pub wrist: Frame,
    pub palm: Frame,
    /// Gripper points or fingertips (N entries).
    pub hand_points: Vec<Frame>,
    /// Finger bases (gripper) or finger joint frames (hand).
    pub effector_bodies: Vec<Frame>,
    pub distance_points: Vec<Vec3>,
}

impl Kinematics {
    pub fn hand_positions(&self) -> Vec<Vec3> {
        self.hand_points.iter().map(|f| f.origin).collect()
    }

    fn anchor(&self, a: Anchor) -> Vec3 {
        match a {
            Anchor::Joint(i) => self.joint_frames[i].origin,
            Anchor::EffectorBody(i) => self.effector_bodies[i].origin,
            Anchor::Wrist => self.wrist.origin,
            Anchor::Palm => self.palm.origin,
            Anchor::HandPoint(i) => self.hand_points[i].origin,
        }
    }
}

pub(crate) fn joint_motion(kind: JointKind, axis: Vec3, q: f64) -> Frame {
    match kind {
        JointKind::Revolute => Frame::new(Mat3::from_axis_angle(axis, q), Vec3::ZERO),
        JointKind::Prismatic => Frame::from_translation(axis * q),
    }
}

fn check_dim(spec: &RobotSpec, q: &[f64]) -> Result<()> {
    if q.len() != spec.joint_count() {
        return Err(Error::DimensionMismatch {
            what: "joint vector",
            expected: spec.joint_count(),
            got: q.len(),
        });
    }
    Ok(())
}

/// Wrist frame only; cheaper than the full keypoint set.
pub(crate) fn wrist_chain(spec: &RobotSpec, anchor: &Frame, q: &[f64], mut visit: impl FnMut(usize, &Frame, Vec3)) -> Frame {
    let yaw = anchor.compose(&joint_motion(JointKind::Revolute, Vec3::Z, q[0]));
    visit(0, anchor, Vec3::Z);
    let carriage_origin = yaw;
    visit(1, &carriage_origin, Vec3::Y);
    let carriage = yaw.compose(&joint_motion(JointKind::Prismatic, Vec3::Y, q[1]));
    let mut f = carriage.compose(&spec.base.mount.to_frame());
    for (i, j) in spec.arm.iter().enumerate() {
        f = f.compose(&j.offset.to_frame());
        visit(2 + i, &f, j.axis);
        f = f.compose(&joint_motion(j.kind, j.axis, q[2 + i]));
    }
    f
}

fn chain_joints(start: &Frame, joints: &[JointSpec], q: &[f64], bodies: &mut Vec<Frame>) -> Frame {
    let mut f = *start;
    for (j, &v) in joints.iter().zip(q) {
        f = f.compose(&j.offset.to_frame());
        bodies.push(f);
        f = f.compose(&joint_motion(j.kind, j.axis, v));
    }
    f
}

/// Forward kinematics for a robot whose base anchor sits at `anchor` in the
/// world. Frames compose left to right: anchor ∘ base ∘ arm ∘ effector.
pub fn forward_kinematics(spec: &RobotSpec, anchor: &Transform, q: &[f64]) -> Result<Kinematics> {
    check_dim(spec, q)?;
    let anchor = anchor.to_frame();
    let mut joint_frames = Vec::with_capacity(IK_DOF);
    let mut joint_axes = Vec::with_capacity(IK_DOF);
    // The drive joint's origin is the carriage position, so it moves with the base.
    let mut carriage_at = Vec3::ZERO;
    let wrist = wrist_chain(spec, &anchor, q, |i, f, axis| {
        joint_frames.push(*f);
        joint_axes.push(f.rotation * axis);
        if i == 1 {
            carriage_at = f.apply(Vec3::Y * q[1]);
        }
    });
    joint_frames[1].origin = carriage_at;

    let palm = wrist.compose(&spec.palm_offset.to_frame());
    let qe = &q[IK_DOF..];
    let mut effector_bodies = Vec::new();
    let mut hand_points = Vec::new();
    match &spec.effector {
        Effector::Gripper(g) => {
            let half = g.open_half_width - qe[0];
            for side in [1.0, -1.0] {
                effector_bodies.push(palm.compose(&Frame::from_translation(g.slide_axis * (side * half))));
            }
            for p in &g.hand_points {
                let local = g.slide_axis * (p.side * half) + p.offset;
                hand_points.push(palm.compose(&Frame::from_translation(local)));
            }
        }
        Effector::Hand(h) => {
            let mut k = 0;
            for finger in &h.fingers {
                let n = finger.joints.len();
                let start = palm.compose(&finger.base.to_frame());
                let last = chain_joints(&start, &finger.joints, &qe[k..k + n], &mut effector_bodies);
                hand_points.push(last.compose(&Frame::from_translation(finger.tip)));
                k += n;
            }
        }
    }

    let mut kin = Kinematics {
        joint_frames,
        joint_axes,
        wrist,
        palm,
        hand_points,
        effector_bodies,
        distance_points: Vec::new(),
    };
    kin.distance_points = spec
        .distance_points
        .iter()
        .map(|p| match *p {
            BodyPoint::At(a) => kin.anchor(a),
            BodyPoint::Midpoint(a, b) => (kin.anchor(a) + kin.anchor(b)) * 0.5,
        })
        .collect();
    Ok(kin)
}

/// Wrist frame for the given joints.
pub fn wrist_frame(spec: &RobotSpec, anchor: &Transform, q: &[f64]) -> Result<Frame> {
    check_dim(spec, q)?;
    Ok(wrist_chain(spec, &anchor.to_frame(), q, |_, _, _| {}))
}

/// 6×9 geometric Jacobian of the wrist frame.
///
/// Columns are base yaw, base drive, then the seven arm joints. Rows are the
/// wrist origin's linear velocity followed by the frame's angular velocity,
/// both in world coordinates.
pub type WristJacobian = [[f64; IK_DOF]; 6];

pub(crate) fn jacobian_at(spec: &RobotSpec, anchor: &Frame, q: &[f64]) -> (Frame, WristJacobian) {
    let mut origins = [Vec3::ZERO; IK_DOF];
    let mut axes = [Vec3::ZERO; IK_DOF];
    let wrist = wrist_chain(spec, anchor, q, |i, f, axis| {
        origins[i] = f.origin;
        axes[i] = f.rotation * axis;
    });
    let mut jac = [[0.0; IK_DOF]; 6];
    for i in 0..IK_DOF {
        let prismatic = i == 1 || spec.arm.get(i.wrapping_sub(2)).is_some_and(|j| j.kind == JointKind::Prismatic);
        let (lin, ang) = if prismatic {
            (axes[i], Vec3::ZERO)
        } else {
            (axes[i].cross(wrist.origin - origins[i]), axes[i])
        };
        for r in 0..3 {
            jac[r][i] = lin[r];
            jac[r + 3][i] = ang[r];
        }
    }
    (wrist, jac)
}

pub fn wrist_jacobian(spec: &RobotSpec, anchor: &Transform, q: &[f64]) -> Result<WristJacobian> {
    check_dim(spec, q)?;
    Ok(jacobian_at(spec, &anchor.to_frame(), q).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RotVec;
    use crate::robot::spec::{gripper_bot, hand_bot};
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn home_pose_is_in_front_of_the_base() {
        let spec = gripper_bot();
        let k = forward_kinematics(&spec, &Transform::IDENTITY, &spec.home()).unwrap();
        // mount (0.15, 0.1, 0.7) + shoulder 0.05 up, upper arm 0.4 forward,
        // forearm+wrist 0.39 pitched 60° down.
        let c = 0.5;
        let s = 3f64.sqrt() / 2.0;
        let want = Vec3::new(0.15, 0.10 + 0.05 + 0.35 + 0.39 * c, 0.75 - 0.39 * s);
        assert!(k.wrist.origin.distance(want) < 1e-12, "{:?}", k.wrist.origin);
        assert_eq!(k.hand_points.len(), 3);
        assert_eq!(k.distance_points.len(), 15);
    }

    #[test]
    fn base_yaw_rotates_the_wrist_about_the_anchor() {
        let spec = gripper_bot();
        let anchor = Transform::from_translation(Vec3::new(1.0, -2.0, 0.0));
        let home = forward_kinematics(&spec, &anchor, &spec.home()).unwrap();
        let mut q = spec.home();
        q[0] = FRAC_PI_2;
        let turned = forward_kinematics(&spec, &anchor, &q).unwrap();
        let rel = home.wrist.origin - anchor.translation;
        let want = anchor.translation + Vec3::new(-rel.y, rel.x, rel.z);
        assert!(turned.wrist.origin.distance(want) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let spec = gripper_bot();
        let err = forward_kinematics(&spec, &Transform::IDENTITY, &[0.0; 9]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 10, got: 9, .. }));
        assert!(wrist_jacobian(&spec, &Transform::IDENTITY, &[0.0; 3]).is_err());
    }

    #[test]
    fn prismatic_column_is_heading() {
        let spec = gripper_bot();
        let anchor = Transform::new(Vec3::new(0.3, 0.2, 0.0), RotVec::new(0.0, 0.0, 0.4));
        let mut q = spec.home();
        q[0] = 0.3;
        let j = wrist_jacobian(&spec, &anchor, &q).unwrap();
        let heading = RotVec::new(0.0, 0.0, 0.7).to_matrix() * Vec3::Y;
        let col: [f64; 6] = core::array::from_fn(|r| j[r][1]);
        let want = [heading.x, heading.y, heading.z, 0.0, 0.0, 0.0];
        for r in 0..6 {
            assert!((col[r] - want[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_fingertips_near_palm() {
        let spec = hand_bot();
        let k = forward_kinematics(&spec, &Transform::IDENTITY, &spec.home()).unwrap();
        assert_eq!(k.hand_points.len(), 5);
        assert_eq!(k.effector_bodies.len(), 12);
        assert_eq!(k.distance_points.len(), 22);
        let mean: f64 = k.hand_points.iter().map(|h| h.origin.distance(k.palm.origin)).sum::<f64>() / 5.0;
        assert!(mean < 0.09, "mean fingertip distance {mean}");
    }

    #[test]
    fn gripper_closure_moves_fingers_inward() {
        let spec = gripper_bot();
        let mut q = spec.home();
        let open = forward_kinematics(&spec, &Transform::IDENTITY, &q).unwrap();
        q[9] = 0.04;
        let closed = forward_kinematics(&spec, &Transform::IDENTITY, &q).unwrap();
        let w_open = open.hand_points[0].origin.distance(open.hand_points[1].origin);
        let w_closed = closed.hand_points[0].origin.distance(closed.hand_points[1].origin);
        assert!((w_open - 0.09).abs() < 1e-12);
        assert!((w_closed - 0.01).abs() < 1e-12);
    }
}
