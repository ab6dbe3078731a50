//! One-joint articulated and free objects, skills, grasp/goal keypoints and
//! the kinematic attachment that stands in for grasp contact.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, Mat3, RotVec, Transform, Vec3};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ObjectKind {
    Revolute,
    Prismatic,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Skill {
    Open,
    Close,
    Pull,
    Push,
    Pick,
}

impl Skill {
    pub const ALL: [Skill; 5] = [Skill::Open, Skill::Close, Skill::Pull, Skill::Push, Skill::Pick];

    pub fn as_str(&self) -> &'static str {
        match self {
            Skill::Open => "open",
            Skill::Close => "close",
            Skill::Pull => "pull",
            Skill::Push => "push",
            Skill::Pick => "pick",
        }
    }

    pub fn parse(s: &str) -> Option<Skill> {
        Skill::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Object with at most one movable part.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObjectModel {
    /// Family name, e.g. "lid".
    pub family: String,
    /// Category used in instructions and reports, e.g. "laptop".
    pub category_label: String,
    pub kind: ObjectKind,
    /// Object frame → joint frame (articulated only).
    pub joint_anchor: Transform,
    pub joint_axis: Vec3,
    /// `[q_min, q_max]` (articulated only).
    pub joint_range: [f64; 2],
    /// Grasp point on the movable part (joint frame), or on the body (free).
    pub grasp_offset: Vec3,
    /// World placement of the object frame; reset overwrites it.
    pub base_pose: Transform,
    /// Placed on a tabletop of random height rather than on the ground.
    pub tabletop: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObjectState {
    /// Joint value (articulated); 0 for free objects.
    pub joint_value: f64,
    /// Body pose (free objects); identity for articulated ones.
    pub free_pose: Transform,
    pub attached: bool,
    /// Palm frame → object frame while a free object is held.
    pub attach_offset: Option<Transform>,
}

impl ObjectModel {
    pub fn is_articulated(&self) -> bool {
        self.kind != ObjectKind::Free
    }

    pub fn range_span(&self) -> f64 {
        self.joint_range[1] - self.joint_range[0]
    }

    /// Joint value at a fraction of the range (0 = q_min).
    pub fn fraction(&self, f: f64) -> f64 {
        self.joint_range[0] + f * self.range_span()
    }

    pub fn validate(&self) -> Result<()> {
        if math::abs(self.joint_axis.norm() - 1.0) > 1e-9 && self.is_articulated() {
            return Err(Error::InvalidConfig(format!("object {} has a non-unit axis", self.family)));
        }
        if self.is_articulated() && !(self.joint_range[0] < self.joint_range[1]) {
            return Err(Error::InvalidConfig(format!("object {} has an empty joint range", self.family)));
        }
        Ok(())
    }

    /// World frame of the movable part at `q` (joint frame after its motion).
    pub fn part_frame(&self, q: f64) -> Frame {
        let base = self.base_pose.to_frame().compose(&self.joint_anchor.to_frame());
        match self.kind {
            ObjectKind::Revolute => base.compose(&Frame::new(Mat3::from_axis_angle(self.joint_axis, q), Vec3::ZERO)),
            ObjectKind::Prismatic => base.compose(&Frame::from_translation(self.joint_axis * q)),
            ObjectKind::Free => self.base_pose.to_frame(),
        }
    }

    pub fn initial_state(&self, joint_value: f64) -> ObjectState {
        ObjectState {
            joint_value: if self.is_articulated() { joint_value } else { 0.0 },
            free_pose: if self.is_articulated() { Transform::IDENTITY } else { self.base_pose },
            attached: false,
            attach_offset: None,
        }
    }
}

/// Grasp point in world coordinates.
pub fn grasp_point(obj: &ObjectModel, s: &ObjectState) -> Vec3 {
    match obj.kind {
        ObjectKind::Free => s.free_pose.apply(obj.grasp_offset),
        _ => obj.part_frame(s.joint_value).apply(obj.grasp_offset),
    }
}

/// Orientation of the movable part (articulated) or body (free).
pub fn part_rotation(obj: &ObjectModel, s: &ObjectState) -> RotVec {
    match obj.kind {
        ObjectKind::Free => s.free_pose.rotation,
        _ => obj.part_frame(s.joint_value).rotvec(),
    }
}

/// A skill applied to an object.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TaskSpec {
    pub id: String,
    pub object: ObjectModel,
    pub skill: Skill,
}

impl TaskSpec {
    pub fn new(object: ObjectModel, skill: Skill) -> Result<TaskSpec> {
        let id = format!("{}-{}", object.family, skill);
        let t = TaskSpec { id, object, skill };
        t.check()?;
        Ok(t)
    }

    /// `"<skill> <object>"`.
    pub fn instruction(&self) -> String {
        format!("{} {}", self.skill, self.object.category_label)
    }

    pub fn check(&self) -> Result<()> {
        self.object.validate()?;
        let cart = self.object.category_label == "cart";
        let ok = match self.skill {
            Skill::Open | Skill::Close => self.object.is_articulated(),
            Skill::Pull | Skill::Push => self.object.kind == ObjectKind::Free && cart,
            Skill::Pick => self.object.kind == ObjectKind::Free && !cart,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleTask(format!(
                "skill {} cannot be applied to {} ({:?})",
                self.skill, self.object.category_label, self.object.kind
            )))
        }
    }

    /// Looks up a shipped task id such as `"lid-open"`.
    pub fn by_id(id: &str) -> Option<TaskSpec> {
        let (family, skill) = id.rsplit_once('-')?;
        let object = family_by_name(family)?;
        TaskSpec::new(object, Skill::parse(skill)?).ok()
    }

    /// Whether success additionally requires the object to be held.
    pub fn success_needs_grasp(&self) -> bool {
        !self.object.is_articulated()
    }
}

/// Horizontal displacement for pull/push and lift height for pick, metres.
pub const FREE_GOAL_DISPLACEMENT: f64 = 0.2;
/// Goal fraction of the joint range for the open skill.
pub const OPEN_GOAL_FRACTION: f64 = 0.6;

/// Goal point for the task given the object's initial state and the
/// robot's initial base position.
pub fn goal_point(task: &TaskSpec, initial: &ObjectState, robot_base: Vec3) -> Result<Vec3> {
    task.check()?;
    let obj = &task.object;
    let g0 = grasp_point(obj, initial);
    let towards_robot = {
        let d = robot_base - g0;
        Vec3::new(d.x, d.y, 0.0).normalized()
    };
    let at = |q: f64| grasp_point(obj, &ObjectState { joint_value: q, ..initial.clone() });
    Ok(match task.skill {
        Skill::Open => at(obj.fraction(OPEN_GOAL_FRACTION)),
        Skill::Close => at(obj.joint_range[0]),
        Skill::Pull => g0 + towards_robot * FREE_GOAL_DISPLACEMENT,
        Skill::Push => g0 - towards_robot * FREE_GOAL_DISPLACEMENT,
        Skill::Pick => g0 + Vec3::Z * FREE_GOAL_DISPLACEMENT,
    })
}

/// Attach offset for a free object: keeps the body's orientation relative to
/// the palm and puts the grasp point on the palm point.
pub fn attach_offset(obj: &ObjectModel, s: &ObjectState, palm: &Frame) -> Transform {
    let rel = palm.rotation.transpose() * s.free_pose.rotation.to_matrix();
    Frame::new(rel, -(rel * obj.grasp_offset)).to_transform()
}

/// Moves an attached object so its grasp point follows the palm.
///
/// Revolute parts take the angle of the palm projected into the hinge plane,
/// prismatic parts the palm's coordinate along the slide; both are clamped
/// to the joint range. Free objects are rigidly carried by the palm frame.
pub fn object_follow(obj: &ObjectModel, s: &ObjectState, palm: &Frame) -> ObjectState {
    let mut next = s.clone();
    match obj.kind {
        ObjectKind::Free => {
            if let Some(off) = &s.attach_offset {
                next.free_pose = palm.compose(&off.to_frame()).to_transform();
            }
        }
        ObjectKind::Prismatic => {
            let origin = obj.part_frame(0.0);
            let axis = origin.rotation * obj.joint_axis;
            let g0 = origin.apply(obj.grasp_offset);
            let q = (palm.origin - g0).dot(axis);
            next.joint_value = q.clamp(obj.joint_range[0], obj.joint_range[1]);
        }
        ObjectKind::Revolute => {
            if let Some(q) = revolute_projection(obj, palm.origin) {
                next.joint_value = q;
            }
        }
    }
    next
}

fn revolute_projection(obj: &ObjectModel, p: Vec3) -> Option<f64> {
    let hinge = obj.base_pose.to_frame().compose(&obj.joint_anchor.to_frame());
    let axis = hinge.rotation * obj.joint_axis;
    let v0 = hinge.rotation * obj.grasp_offset;
    let r0 = v0 - axis * v0.dot(axis);
    let w = p - hinge.origin;
    let wr = w - axis * w.dot(axis);
    if r0.norm() < 1e-9 || wr.norm() < 1e-9 {
        return None;
    }
    let theta = math::atan2(axis.dot(r0.cross(wr)), r0.dot(wr));
    let [lo, hi] = obj.joint_range;
    // Pick the 2π-equivalent angle nearest to the range, then clamp.
    let best = [theta - math::TAU, theta, theta + math::TAU]
        .into_iter()
        .map(|c| {
            let clamped = c.clamp(lo, hi);
            (math::abs(c - clamped), clamped)
        })
        .fold((f64::INFINITY, theta.clamp(lo, hi)), |acc, x| if x.0 < acc.0 { x } else { acc });
    Some(best.1)
}

fn deg(d: f64) -> f64 {
    d * math::PI / 180.0
}

fn object(
    family: &str,
    label: &str,
    kind: ObjectKind,
    joint_anchor: Transform,
    joint_axis: Vec3,
    joint_range: [f64; 2],
    grasp_offset: Vec3,
    tabletop: bool,
) -> ObjectModel {
    ObjectModel {
        family: family.to_string(),
        category_label: label.to_string(),
        kind,
        joint_anchor,
        joint_axis,
        joint_range,
        grasp_offset,
        base_pose: Transform::IDENTITY,
        tabletop,
    }
}

/// Box/laptop lid hinged along x at the back, flipping upward.
pub fn lid() -> ObjectModel {
    object(
        "lid",
        "laptop",
        ObjectKind::Revolute,
        Transform::from_translation(Vec3::new(0.0, 0.15, 0.12)),
        Vec3::new(-1.0, 0.0, 0.0),
        [0.0, deg(90.0)],
        Vec3::new(0.0, -0.30, 0.0),
        true,
    )
}

/// Cabinet door on a vertical hinge, swinging toward −y.
pub fn swing_door() -> ObjectModel {
    object(
        "door",
        "cabinet",
        ObjectKind::Revolute,
        Transform::from_translation(Vec3::new(-0.35, -0.2, 0.8)),
        Vec3::new(0.0, 0.0, -1.0),
        [0.0, deg(90.0)],
        Vec3::new(0.35, 0.0, 0.0),
        false,
    )
}

/// Drawer sliding out toward −y.
pub fn drawer() -> ObjectModel {
    object(
        "drawer",
        "table",
        ObjectKind::Prismatic,
        Transform::from_translation(Vec3::new(0.0, -0.2, 0.55)),
        Vec3::new(0.0, -1.0, 0.0),
        [0.0, 0.35],
        Vec3::ZERO,
        false,
    )
}

/// Faucet-style valve wheel facing −y, turned by its rim.
pub fn valve() -> ObjectModel {
    object(
        "valve",
        "faucet",
        ObjectKind::Revolute,
        Transform::from_translation(Vec3::new(0.0, 0.0, 0.2)),
        Vec3::new(0.0, -1.0, 0.0),
        [0.0, deg(120.0)],
        Vec3::new(0.12, 0.0, 0.0),
        true,
    )
}

/// Cart on the ground, held by a handle on its −y side.
pub fn cart() -> ObjectModel {
    object(
        "cart",
        "cart",
        ObjectKind::Free,
        Transform::IDENTITY,
        Vec3::Z,
        [0.0, 0.0],
        Vec3::new(0.0, -0.25, 0.85),
        false,
    )
}

/// Rigid tabletop item grasped at its centre of mass.
pub fn holistic() -> ObjectModel {
    object(
        "holistic",
        "holistic",
        ObjectKind::Free,
        Transform::IDENTITY,
        Vec3::Z,
        [0.0, 0.0],
        Vec3::new(0.0, 0.0, 0.05),
        true,
    )
}

pub const FAMILIES: [&str; 6] = ["lid", "door", "drawer", "valve", "cart", "holistic"];

pub fn family_by_name(name: &str) -> Option<ObjectModel> {
    match name {
        "lid" => Some(lid()),
        "door" => Some(swing_door()),
        "drawer" => Some(drawer()),
        "valve" => Some(valve()),
        "cart" => Some(cart()),
        // Generic name for the free pick object.
        "holistic" | "free" => Some(holistic()),
        _ => None,
    }
}

/// Every compatible (family, skill) pair.
pub fn shipped_tasks() -> Vec<TaskSpec> {
    let mut out = Vec::new();
    for fam in FAMILIES {
        for skill in Skill::ALL {
            if let Ok(t) = TaskSpec::new(family_by_name(fam).unwrap(), skill) {
                out.push(t);
            }
        }
    }
    out
}
