//! Flat observation vector: time embedding, object keypoints,
//! proprioception, robot-to-grasp distances and the previous action.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, RotVec, Transform, Vec3};
use crate::math;
use crate::robot::{forward_kinematics, RobotSpec};

/// Sine/cosine pairs in the time embedding.
pub const TIME_FREQUENCIES: usize = 15;
pub const TIME_DIM: usize = 2 * TIME_FREQUENCIES;
pub const OBJECT_DIM: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObservationLayout {
    pub time: usize,
    pub object: usize,
    pub proprioception: usize,
    pub distance: usize,
    pub previous_action: usize,
}

impl ObservationLayout {
    pub fn for_robot(spec: &RobotSpec) -> ObservationLayout {
        let n = spec.hand_point_count();
        ObservationLayout {
            time: TIME_DIM,
            object: OBJECT_DIM,
            proprioception: 12 + 12 * n + 3 * spec.joint_count(),
            distance: 1 + n + spec.distance_point_count() + 3,
            previous_action: spec.action_dim(),
        }
    }

    pub fn total(&self) -> usize {
        self.time + self.object + self.proprioception + self.distance + self.previous_action
    }

    /// `(name, offset, length)` for each block in vector order.
    pub fn blocks(&self) -> [(&'static str, usize, usize); 5] {
        let sizes = [
            ("time", self.time),
            ("object", self.object),
            ("proprioception", self.proprioception),
            ("distance", self.distance),
            ("previous_action", self.previous_action),
        ];
        let mut offset = 0;
        sizes.map(|(name, len)| {
            let b = (name, offset, len);
            offset += len;
            b
        })
    }

    pub fn block(&self, name: &str) -> Option<core::ops::Range<usize>> {
        self.blocks()
            .into_iter()
            .find(|b| b.0 == name)
            .map(|(_, o, l)| o..o + l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub layout: ObservationLayout,
}

impl Observation {
    pub fn block(&self, name: &str) -> &[f64] {
        match self.layout.block(name) {
            Some(r) => &self.values[r],
            None => &[],
        }
    }
}

/// `(sin 2πkτ, cos 2πkτ)` for k = 1..15 with τ = t / T.
pub fn time_embedding(t: usize, max_steps: usize) -> [f64; TIME_DIM] {
    let tau = t as f64 / max_steps.max(1) as f64;
    let mut out = [0.0; TIME_DIM];
    for k in 1..=TIME_FREQUENCIES {
        let phase = math::TAU * k as f64 * tau;
        out[2 * (k - 1)] = math::sin(phase);
        out[2 * (k - 1) + 1] = math::cos(phase);
    }
    out
}

/// Everything the observation is a function of. Velocities come from the
/// difference between the current and previous joint vectors.
#[derive(Debug, Clone, Copy)]
pub struct ObservationInputs<'a> {
    pub spec: &'a RobotSpec,
    pub anchor: &'a Transform,
    pub t: usize,
    pub max_steps: usize,
    pub dt: f64,
    pub q: &'a [f64],
    pub prev_q: &'a [f64],
    pub qdot: &'a [f64],
    pub qddot: &'a [f64],
    pub prev_action: &'a [f64],
    pub grasp: Vec3,
    pub part_rotation: RotVec,
    pub goal: Vec3,
}

fn push_frame_motion(out: &mut Vec<f64>, now: &Frame, before: &Frame, dt: f64) {
    out.extend(now.origin.to_array());
    out.extend(now.rotvec().0.to_array());
    out.extend(((now.origin - before.origin) / dt).to_array());
    let turn = RotVec::from_matrix(&(now.rotation * before.rotation.transpose()));
    out.extend((turn.0 / dt).to_array());
}

pub fn build_observation(inp: &ObservationInputs<'_>) -> Result<Observation> {
    let spec = inp.spec;
    let layout = ObservationLayout::for_robot(spec);
    let n = spec.joint_count();
    for (what, v) in [("qdot", inp.qdot), ("qddot", inp.qddot)] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got: v.len(),
            });
        }
    }
    if inp.prev_action.len() != spec.action_dim() {
        return Err(Error::DimensionMismatch {
            what: "previous action",
            expected: spec.action_dim(),
            got: inp.prev_action.len(),
        });
    }
    let now = forward_kinematics(spec, inp.anchor, inp.q)?;
    let before = forward_kinematics(spec, inp.anchor, inp.prev_q)?;

    let mut v = Vec::with_capacity(layout.total());
    v.extend(time_embedding(inp.t, inp.max_steps));

    v.extend(inp.grasp.to_array());
    v.extend(inp.part_rotation.0.to_array());
    v.extend(inp.goal.to_array());

    push_frame_motion(&mut v, &now.palm, &before.palm, inp.dt);
    for (h, h0) in now.hand_points.iter().zip(&before.hand_points) {
        push_frame_motion(&mut v, h, h0, inp.dt);
    }
    v.extend_from_slice(inp.q);
    v.extend_from_slice(inp.qdot);
    v.extend_from_slice(inp.qddot);

    v.push(now.palm.origin.distance(inp.grasp));
    v.extend(now.hand_points.iter().map(|h| h.origin.distance(inp.grasp)));
    v.extend(now.distance_points.iter().map(|p| p.distance(inp.grasp)));
    v.extend((inp.grasp - now.palm.origin).to_array());

    v.extend_from_slice(inp.prev_action);
    debug_assert_eq!(v.len(), layout.total());
    Ok(Observation { values: v, layout })
}
