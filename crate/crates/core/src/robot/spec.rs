use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RotVec, Transform, Vec3};
use crate::math;

/// Number of base joints (yaw, drive).
pub const BASE_DOF: usize = 2;
/// Number of arm joints.
pub const ARM_DOF: usize = 7;
/// Joints driven by the wrist IK: base + arm.
pub const IK_DOF: usize = BASE_DOF + ARM_DOF;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    /// rad/s or m/s
    pub max_velocity: f64,
}

impl JointLimits {
    pub const fn new(lower: f64, upper: f64, max_velocity: f64) -> Self {
        JointLimits {
            lower,
            upper,
            max_velocity,
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// A single-axis joint attached to its parent by a fixed offset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// Parent frame → joint frame at zero joint value.
    pub offset: Transform,
    /// Unit axis in the joint frame.
    pub axis: Vec3,
    pub limits: JointLimits,
}

impl JointSpec {
    pub fn revolute(name: &str, offset: Transform, axis: Vec3, limits: JointLimits) -> Self {
        JointSpec {
            name: name.to_string(),
            kind: JointKind::Revolute,
            offset,
            axis,
            limits,
        }
    }
}

/// Mobile base: yaw about world z at the anchor, then drive along the
/// rotated local y.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BaseSpec {
    pub yaw: JointLimits,
    pub drive: JointLimits,
    /// Arm mount relative to the base carriage.
    pub mount: Transform,
}

/// A point on the gripper: `palm ∘ (slide_axis · side · half_opening + offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GripperPoint {
    /// +1 left finger, −1 right finger, 0 centre.
    pub side: f64,
    pub offset: Vec3,
}

/// Parallel gripper with one closure joint moving both fingers symmetrically.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GripperSpec {
    /// Closure, 0 = fully open.
    pub joint: JointLimits,
    pub slide_axis: Vec3,
    pub open_half_width: f64,
    pub hand_points: Vec<GripperPoint>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FingerSpec {
    pub name: String,
    /// Palm frame → first joint frame is `base ∘ joints[0].offset`.
    pub base: Transform,
    pub joints: Vec<JointSpec>,
    /// Fingertip position in the last joint frame.
    pub tip: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HandSpec {
    pub fingers: Vec<FingerSpec>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum Effector {
    Gripper(GripperSpec),
    Hand(HandSpec),
}

/// Named locations on the robot body used to build body keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Anchor {
    /// Origin of base/arm joint `i` (0 = yaw, 1 = drive carriage, 2.. = arm).
    Joint(usize),
    /// Origin of effector body `i` (finger bases / finger joints).
    EffectorBody(usize),
    Wrist,
    Palm,
    HandPoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BodyPoint {
    At(Anchor),
    Midpoint(Anchor, Anchor),
}

/// Kinematic description of a mobile manipulator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RobotSpec {
    pub name: String,
    pub base: BaseSpec,
    pub arm: Vec<JointSpec>,
    /// Wrist frame → palm frame.
    pub palm_offset: Transform,
    pub effector: Effector,
    pub distance_points: Vec<BodyPoint>,
}

impl Effector {
    /// Number of actuated effector joints (D).
    pub fn dof(&self) -> usize {
        match self {
            Effector::Gripper(_) => 1,
            Effector::Hand(h) => h.fingers.iter().map(|f| f.joints.len()).sum(),
        }
    }

    /// Number of hand keypoints (N).
    pub fn hand_point_count(&self) -> usize {
        match self {
            Effector::Gripper(g) => g.hand_points.len(),
            Effector::Hand(h) => h.fingers.len(),
        }
    }

    pub fn body_count(&self) -> usize {
        match self {
            Effector::Gripper(_) => 2,
            Effector::Hand(_) => self.dof(),
        }
    }

    pub fn limits(&self) -> Vec<JointLimits> {
        match self {
            Effector::Gripper(g) => vec![g.joint],
            Effector::Hand(h) => h
                .fingers
                .iter()
                .flat_map(|f| f.joints.iter().map(|j| j.limits))
                .collect(),
        }
    }
}

impl RobotSpec {
    /// D, the effector joint count.
    pub fn effector_dof(&self) -> usize {
        self.effector.dof()
    }

    /// 2 + 7 + D.
    pub fn joint_count(&self) -> usize {
        IK_DOF + self.effector_dof()
    }

    /// 6 + D.
    pub fn action_dim(&self) -> usize {
        6 + self.effector_dof()
    }

    pub fn hand_point_count(&self) -> usize {
        self.effector.hand_point_count()
    }

    pub fn distance_point_count(&self) -> usize {
        self.distance_points.len()
    }

    /// Limits for every actuated joint in state order.
    pub fn joint_limits(&self) -> Vec<JointLimits> {
        let mut out = Vec::with_capacity(self.joint_count());
        out.push(self.base.yaw);
        out.push(self.base.drive);
        out.extend(self.arm.iter().map(|j| j.limits));
        out.extend(self.effector.limits());
        out
    }

    pub fn effector_limits(&self) -> Vec<JointLimits> {
        self.effector.limits()
    }

    /// Effector joint values at reset (all zero: open gripper, extended fingers).
    pub fn effector_home(&self) -> Vec<f64> {
        vec![0.0; self.effector_dof()]
    }

    pub fn home(&self) -> Vec<f64> {
        vec![0.0; self.joint_count()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.arm.len() != ARM_DOF {
            return Err(Error::InvalidConfig(alloc::format!(
                "robot {} has {} arm joints, expected {ARM_DOF}",
                self.name,
                self.arm.len()
            )));
        }
        for l in self.joint_limits() {
            if !(l.lower <= l.upper) || !(l.max_velocity > 0.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "robot {} has unordered joint limits or non-positive velocity",
                    self.name
                )));
            }
        }
        let mut axes: Vec<Vec3> = self.arm.iter().map(|j| j.axis).collect();
        if let Effector::Hand(h) = &self.effector {
            axes.extend(h.fingers.iter().flat_map(|f| f.joints.iter().map(|j| j.axis)));
        }
        if axes.iter().any(|a| math::abs(a.norm() - 1.0) > 1e-9) {
            return Err(Error::InvalidConfig(alloc::format!(
                "robot {} has a non-unit joint axis",
                self.name
            )));
        }
        let n_body = self.effector.body_count();
        let n_hand = self.hand_point_count();
        let anchor_ok = |a: &Anchor| match *a {
            Anchor::Joint(i) => i < IK_DOF,
            Anchor::EffectorBody(i) => i < n_body,
            Anchor::HandPoint(i) => i < n_hand,
            Anchor::Wrist | Anchor::Palm => true,
        };
        let points_ok = self.distance_points.iter().all(|p| match p {
            BodyPoint::At(a) => anchor_ok(a),
            BodyPoint::Midpoint(a, b) => anchor_ok(a) && anchor_ok(b),
        });
        if !points_ok {
            return Err(Error::InvalidConfig(alloc::format!(
                "robot {} has a distance point referring to a missing body",
                self.name
            )));
        }
        Ok(())
    }

    /// Looks up a shipped robot by name.
    pub fn by_name(name: &str) -> Option<RobotSpec> {
        match name {
            "gripper-bot" => Some(gripper_bot()),
            "hand-bot" => Some(hand_bot()),
            _ => None,
        }
    }
}

pub const SHIPPED_ROBOTS: [&str; 2] = ["gripper-bot", "hand-bot"];

fn tr(x: f64, y: f64, z: f64) -> Transform {
    Transform::from_translation(Vec3::new(x, y, z))
}

// Shared base and arm. Base frame: x right, y forward, z up. At zero the
// upper arm points forward and the forearm is pitched 60° down, so the
// gripper starts in front of the robot with the elbow bent. The elbow limit
// keeps at least ~11° of bend, which keeps the arm away from the
// straight-elbow singularity. Palm reach from the base anchor is ~0.97 m.
fn base_and_arm() -> (BaseSpec, Vec<JointSpec>) {
    let base = BaseSpec {
        yaw: JointLimits::new(-math::PI, math::PI, 1.0),
        drive: JointLimits::new(-1.5, 3.0, 1.0),
        mount: tr(0.15, 0.10, 0.70),
    };
    let arm_v = 2.0;
    let arm = vec![
        JointSpec::revolute("shoulder_yaw", Transform::IDENTITY, Vec3::Z, JointLimits::new(-2.6, 2.6, arm_v)),
        JointSpec::revolute("shoulder_pitch", tr(0.0, 0.0, 0.05), Vec3::X, JointLimits::new(-1.8, 1.8, arm_v)),
        JointSpec::revolute("upper_arm_roll", tr(0.0, 0.05, 0.0), Vec3::Y, JointLimits::new(-2.8, 2.8, arm_v)),
        JointSpec::revolute(
            "elbow",
            Transform::new(Vec3::new(0.0, 0.35, 0.0), RotVec::new(-math::PI / 3.0, 0.0, 0.0)),
            Vec3::X,
            JointLimits::new(-1.9, 0.85, arm_v),
        ),
        JointSpec::revolute("forearm_roll", tr(0.0, 0.15, 0.0), Vec3::Y, JointLimits::new(-2.8, 2.8, arm_v)),
        JointSpec::revolute("wrist_pitch", tr(0.0, 0.20, 0.0), Vec3::X, JointLimits::new(-1.7, 1.7, arm_v)),
        JointSpec::revolute("wrist_roll", tr(0.0, 0.04, 0.0), Vec3::Y, JointLimits::new(-2.8, 2.8, arm_v)),
    ];
    (base, arm)
}

/// Mobile manipulator with a 1-DOF parallel gripper (D = 1, N = 3).
pub fn gripper_bot() -> RobotSpec {
    let (base, arm) = base_and_arm();
    let effector = Effector::Gripper(GripperSpec {
        joint: JointLimits::new(0.0, 0.04, 0.1),
        slide_axis: Vec3::X,
        open_half_width: 0.045,
        hand_points: vec![
            GripperPoint { side: 1.0, offset: Vec3::new(0.0, 0.05, 0.0) },
            GripperPoint { side: -1.0, offset: Vec3::new(0.0, 0.05, 0.0) },
            GripperPoint { side: 0.0, offset: Vec3::new(0.0, 0.05, 0.0) },
        ],
    });
    let mut distance_points: Vec<BodyPoint> = (0..IK_DOF).map(|i| BodyPoint::At(Anchor::Joint(i))).collect();
    distance_points.extend([
        BodyPoint::At(Anchor::EffectorBody(0)),
        BodyPoint::At(Anchor::EffectorBody(1)),
        BodyPoint::At(Anchor::Palm),
        BodyPoint::Midpoint(Anchor::Joint(4), Anchor::Joint(5)),
        BodyPoint::Midpoint(Anchor::Joint(5), Anchor::Joint(6)),
        BodyPoint::Midpoint(Anchor::Joint(8), Anchor::Palm),
    ]);
    RobotSpec {
        name: "gripper-bot".to_string(),
        base,
        arm,
        palm_offset: tr(0.0, 0.08, 0.0),
        effector,
        distance_points,
    }
}

fn finger(name: &str, base: Transform, segments: &[(f64, Vec3)], tip: f64) -> FingerSpec {
    // Each segment is (length of the previous link, joint axis); the first
    // joint sits at the finger base.
    let hand_v = 4.0;
    let joints = segments
        .iter()
        .enumerate()
        .map(|(i, (link, axis))| JointSpec {
            name: alloc::format!("{name}_{i}"),
            kind: JointKind::Revolute,
            offset: tr(0.0, *link, 0.0),
            axis: *axis,
            limits: JointLimits::new(0.0, 1.6, hand_v),
        })
        .collect();
    FingerSpec {
        name: name.to_string(),
        base,
        joints,
        tip: Vec3::new(0.0, tip, 0.0),
    }
}

/// Mobile manipulator with a 12-DOF five-finger hand (D = 12, N = 5).
pub fn hand_bot() -> RobotSpec {
    let (base, arm) = base_and_arm();
    // Finger flexion is about palm −x so positive angles curl toward −z (palm side).
    let flex = Vec3::new(-1.0, 0.0, 0.0);
    let fingers = vec![
        finger(
            "thumb",
            Transform::new(Vec3::new(0.035, -0.02, -0.01), RotVec::new(0.0, 0.0, -0.6)),
            &[(0.0, Vec3::Y), (0.0, Vec3::Z), (0.03, flex), (0.025, flex)],
            0.025,
        ),
        finger("index", tr(0.025, 0.0, 0.0), &[(0.0, flex), (0.035, flex)], 0.03),
        finger("middle", tr(0.008, 0.005, 0.0), &[(0.0, flex), (0.038, flex)], 0.032),
        finger("ring", tr(-0.009, 0.0, 0.0), &[(0.0, flex), (0.035, flex)], 0.03),
        finger("little", tr(-0.025, -0.008, 0.0), &[(0.0, flex), (0.03, flex)], 0.026),
    ];
    let effector = Effector::Hand(HandSpec { fingers });
    let mut distance_points: Vec<BodyPoint> = (0..IK_DOF).map(|i| BodyPoint::At(Anchor::Joint(i))).collect();
    distance_points.extend((0..12).map(|i| BodyPoint::At(Anchor::EffectorBody(i))));
    distance_points.push(BodyPoint::Midpoint(Anchor::Joint(5), Anchor::Joint(6)));
    RobotSpec {
        name: "hand-bot".to_string(),
        base,
        arm,
        palm_offset: tr(0.0, 0.08, 0.0),
        effector,
        distance_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_robot_dimensions() {
        let g = gripper_bot();
        g.validate().unwrap();
        assert_eq!(g.effector_dof(), 1);
        assert_eq!(g.joint_count(), 10);
        assert_eq!(g.action_dim(), 7);
        assert_eq!(g.hand_point_count(), 3);
        assert_eq!(g.distance_point_count(), 15);

        let h = hand_bot();
        h.validate().unwrap();
        assert_eq!(h.effector_dof(), 12);
        assert_eq!(h.joint_count(), 21);
        assert_eq!(h.action_dim(), 18);
        assert_eq!(h.hand_point_count(), 5);
        assert_eq!(h.distance_point_count(), 22);
    }

    #[test]
    fn validate_rejects_bad_axis() {
        let mut g = gripper_bot();
        g.arm[2].axis = Vec3::new(0.0, 2.0, 0.0);
        assert!(g.validate().is_err());
    }

    #[test]
    fn validate_rejects_unordered_limits() {
        let mut g = gripper_bot();
        g.arm[0].limits = JointLimits::new(1.0, -1.0, 1.0);
        assert!(g.validate().is_err());
    }
}
