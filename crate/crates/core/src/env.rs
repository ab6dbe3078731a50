//! Episode lifecycle: randomized reset, stepping, grasp attachment and
//! termination.

use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RotVec, Transform, Vec3};
use crate::math;
use crate::observation::{build_observation, Observation, ObservationInputs};
use crate::reward::{grasp_flag, total_reward, RewardSnapshot, RewardTerms, RewardWeights};
use crate::rng::{Stream, StreamRng};
use crate::robot::{apply_action, forward_kinematics, Action, Kinematics, RobotSpec, RobotState, StepOptions};
use crate::world::{self, grasp_point, part_rotation, ObjectKind, ObjectState, Skill, TaskSpec};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct EpisodeConfig {
    pub seed: u64,
    pub max_steps: usize,
    pub dt: f64,
    /// Per-axis base offset from the grasp point, m.
    pub base_offset_range: [f64; 2],
    /// Replaces `base_offset_range` when the base is fixed.
    pub fixed_base_offset_range: [f64; 2],
    /// Heading noise half-width, radians.
    pub yaw_noise: f64,
    pub object_height_range: [f64; 2],
    /// Initial opening for the open skill, radians (prismatic joints use the
    /// same fraction of a right angle applied to their range).
    pub open_init: f64,
    /// Initial fraction open for the close skill.
    pub close_init_range: [f64; 2],
    pub fixed_base: bool,
    /// End the episode on the first successful step.
    pub terminate_on_success: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            seed: 0,
            max_steps: 300,
            dt: 1.0 / 30.0,
            base_offset_range: [1.0, 1.5],
            fixed_base_offset_range: [0.5, 1.0],
            yaw_noise: 15f64.to_radians(),
            object_height_range: [0.2, 0.7],
            open_init: 10f64.to_radians(),
            close_init_range: [0.4, 0.8],
            fixed_base: false,
            terminate_on_success: true,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite();
        let ranges = [
            ("base_offset_range", self.base_offset_range),
            ("fixed_base_offset_range", self.fixed_base_offset_range),
            ("object_height_range", self.object_height_range),
            ("close_init_range", self.close_init_range),
        ];
        for (name, r) in ranges {
            if !ordered(r) {
                return Err(Error::InvalidConfig(format!("{name} must be an ordered pair")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        Ok(())
    }

    pub fn offset_range(&self) -> [f64; 2] {
        if self.fixed_base {
            self.fixed_base_offset_range
        } else {
            self.base_offset_range
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub terms: RewardTerms,
    pub f_g: bool,
    /// This step met the success predicate.
    pub success: bool,
    pub ik_warning: bool,
    pub goal_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    pub spec: RobotSpec,
    pub task: TaskSpec,
    pub config: EpisodeConfig,
    pub episode: u64,
    pub robot: RobotState,
    /// Joint vector one step earlier (equal to `robot.q` after reset).
    pub prev_q: Vec<f64>,
    pub object: ObjectState,
    pub goal: Vec3,
    pub t: usize,
    pub f_g: bool,
    /// Latched once the success predicate holds.
    pub success: bool,
    pub done: bool,
    pub palm_init_rotation: RotVec,
    pub effector_init: Vec<f64>,
    /// Base position at reset; pull/push goals are measured from it.
    pub base_init: Vec3,
}

fn yaw_toward(from: Vec3, to: Vec3) -> f64 {
    // Local +y is the heading: Rz(ψ)·ŷ = (−sin ψ, cos ψ).
    math::atan2(-(to.x - from.x), to.y - from.y)
}

impl Env {
    /// Samples episode `episode` for the given seed in `config`.
    pub fn reset(config: &EpisodeConfig, task: &TaskSpec, spec: &RobotSpec, episode: u64) -> Result<(Env, Observation)> {
        config.validate()?;
        task.check()?;
        spec.validate()?;
        let mut rng = StreamRng::new(config.seed, episode, Stream::Reset);
        let mut obj = task.object.clone();

        let height = if obj.tabletop {
            rng.uniform_range(config.object_height_range[0], config.object_height_range[1])
        } else {
            0.0
        };
        let joint_value = match (obj.kind, task.skill) {
            (ObjectKind::Free, _) => 0.0,
            (ObjectKind::Revolute, Skill::Open) => obj.joint_range[0] + config.open_init,
            (ObjectKind::Prismatic, Skill::Open) => obj.fraction(config.open_init / (math::PI / 2.0)),
            _ => obj.fraction(rng.uniform_range(config.close_init_range[0], config.close_init_range[1])),
        }
        .clamp(obj.joint_range[0].min(obj.joint_range[1]), obj.joint_range[1].max(obj.joint_range[0]));

        // Place the grasp point above the origin.
        obj.base_pose = Transform::from_translation(Vec3::new(0.0, 0.0, height));
        let g = grasp_point(&obj, &obj.initial_state(joint_value));
        obj.base_pose = Transform::from_translation(Vec3::new(-g.x, -g.y, height));
        let object = obj.initial_state(joint_value);
        let grasp = grasp_point(&obj, &object);

        let [lo, hi] = config.offset_range();
        let side = rng.sign();
        let ox = rng.uniform_range(lo, hi);
        let oy = rng.uniform_range(lo, hi);
        let yaw_noise = rng.uniform_range(-config.yaw_noise, config.yaw_noise);
        let base = Vec3::new(side * ox, -oy, 0.0);
        let heading = yaw_toward(base, grasp) + yaw_noise;
        let anchor = Transform::new(base, RotVec::new(0.0, 0.0, heading));

        let robot = RobotState::at_rest(spec, anchor, spec.home())?;
        let task = TaskSpec { object: obj, ..task.clone() };
        let goal = world::goal_point(&task, &object, base)?;
        let kin = forward_kinematics(spec, &anchor, &robot.q)?;
        let f_g = grasp_flag(&kin.hand_positions(), grasp, RewardWeights::default().grasp_threshold)?;
        let env = Env {
            spec: spec.clone(),
            task,
            config: config.clone(),
            episode,
            prev_q: robot.q.clone(),
            effector_init: robot.q[crate::robot::IK_DOF..].to_vec(),
            palm_init_rotation: kin.palm.rotvec(),
            robot,
            object,
            goal,
            t: 0,
            f_g,
            success: false,
            done: false,
            base_init: base,
        };
        let obs = env.observation()?;
        Ok((env, obs))
    }

    pub fn kinematics(&self) -> Result<Kinematics> {
        forward_kinematics(&self.spec, &self.robot.anchor, &self.robot.q)
    }

    pub fn grasp_point(&self) -> Vec3 {
        grasp_point(&self.task.object, &self.object)
    }

    pub fn goal_distance(&self) -> f64 {
        self.grasp_point().distance(self.goal)
    }

    pub fn observation(&self) -> Result<Observation> {
        build_observation(&ObservationInputs {
            spec: &self.spec,
            anchor: &self.robot.anchor,
            t: self.t,
            max_steps: self.config.max_steps,
            dt: self.config.dt,
            q: &self.robot.q,
            prev_q: &self.prev_q,
            qdot: &self.robot.qdot,
            qddot: &self.robot.qddot,
            prev_action: &self.robot.prev_action,
            grasp: self.grasp_point(),
            part_rotation: part_rotation(&self.task.object, &self.object),
            goal: self.goal,
        })
    }

    /// Moves the robot to `q` without dynamics. Test hook for exercising the
    /// grasp logic from chosen poses.
    pub fn teleport_robot(&mut self, q: Vec<f64>) -> Result<()> {
        let state = RobotState::at_rest(&self.spec, self.robot.anchor, q)?;
        self.prev_q = state.q.clone();
        self.robot = state;
        Ok(())
    }

    pub fn step(&mut self, action: &[f64], weights: &RewardWeights) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != self.spec.action_dim() {
            return Err(Error::DimensionMismatch {
                what: "action",
                expected: self.spec.action_dim(),
                got: action.len(),
            });
        }
        if action.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("action contains non-finite values".into()));
        }
        let opts = StepOptions {
            fixed_base: self.config.fixed_base,
            ..StepOptions::default()
        };
        let robot = apply_action(&self.spec, &self.robot, &Action::from_slice(action)?, self.config.dt, &opts)?;
        let kin = forward_kinematics(&self.spec, &robot.anchor, &robot.q)?;
        let hands = kin.hand_positions();
        let obj = &self.task.object;

        let mut object = self.object.clone();
        if grasp_flag(&hands, grasp_point(obj, &object), weights.grasp_threshold)? {
            if !object.attached {
                object.attached = true;
                if obj.kind == ObjectKind::Free {
                    object.attach_offset = Some(world::attach_offset(obj, &object, &kin.palm));
                }
            }
            object = world::object_follow(obj, &object, &kin.palm);
        }
        let grasp = grasp_point(obj, &object);
        let f_g = grasp_flag(&hands, grasp, weights.grasp_threshold)?;
        if !f_g {
            object.attached = false;
            object.attach_offset = None;
        }

        let terms = total_reward(
            &RewardSnapshot {
                hand_points: &hands,
                palm_position: kin.palm.origin,
                palm_rotation: kin.palm.rotvec(),
                palm_init_rotation: self.palm_init_rotation,
                grasp,
                goal: self.goal,
                effector_init: &self.effector_init,
            },
            &robot.prev_action,
            weights,
        )?;
        let goal_distance = grasp.distance(self.goal);
        let success_now = goal_distance < weights.success_threshold && (f_g || !self.task.success_needs_grasp());

        self.prev_q = core::mem::replace(&mut self.robot, robot).q;
        self.object = object;
        self.f_g = f_g;
        self.t += 1;
        self.success |= success_now;
        self.done = (success_now && self.config.terminate_on_success) || self.t >= self.config.max_steps;

        Ok(StepOutcome {
            observation: self.observation()?,
            reward: terms.total,
            done: self.done,
            info: StepInfo {
                terms,
                f_g,
                success: success_now,
                ik_warning: self.robot.ik_warning,
                goal_distance,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::gripper_bot;
    use crate::world::{drawer, lid};

    fn lid_open() -> TaskSpec {
        TaskSpec::new(lid(), Skill::Open).unwrap()
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = EpisodeConfig { seed: 11, ..Default::default() };
        let spec = gripper_bot();
        let a = Env::reset(&cfg, &lid_open(), &spec, 3).unwrap();
        let b = Env::reset(&cfg, &lid_open(), &spec, 3).unwrap();
        assert_eq!(a, b);
        let c = Env::reset(&cfg, &lid_open(), &spec, 4).unwrap();
        assert_ne!(a.0.robot.anchor, c.0.robot.anchor);
    }

    #[test]
    fn reset_places_grasp_over_origin() {
        let spec = gripper_bot();
        for ep in 0..20 {
            let (env, obs) = Env::reset(&EpisodeConfig::default(), &lid_open(), &spec, ep).unwrap();
            let g = env.grasp_point();
            assert!(g.x.abs() < 1e-12 && g.y.abs() < 1e-12);
            assert!((0.2..=0.7 + 0.5).contains(&g.z));
            assert!((env.object.joint_value - 10f64.to_radians()).abs() < 1e-15);
            let b = env.robot.anchor.translation;
            assert!((1.0..=1.5).contains(&b.x.abs()) && (1.0..=1.5).contains(&-b.y));
            assert_eq!(obs.values.len(), 146);
            assert!(!env.f_g);
        }
    }

    #[test]
    fn fixed_base_offsets_are_closer() {
        let spec = gripper_bot();
        let cfg = EpisodeConfig { fixed_base: true, ..Default::default() };
        for ep in 0..20 {
            let (env, _) = Env::reset(&cfg, &lid_open(), &spec, ep).unwrap();
            let b = env.robot.anchor.translation;
            assert!((0.5..=1.0).contains(&b.x.abs()) && (0.5..=1.0).contains(&-b.y));
        }
    }

    #[test]
    fn close_skill_initial_fraction() {
        let spec = gripper_bot();
        let task = TaskSpec::new(drawer(), Skill::Close).unwrap();
        for ep in 0..20 {
            let (env, _) = Env::reset(&EpisodeConfig::default(), &task, &spec, ep).unwrap();
            let f = env.object.joint_value / 0.35;
            assert!((0.4..=0.8).contains(&f), "{f}");
        }
    }

    #[test]
    fn zero_actions_time_out() {
        let spec = gripper_bot();
        let (mut env, _) = Env::reset(&EpisodeConfig::default(), &lid_open(), &spec, 0).unwrap();
        let w = RewardWeights::default();
        let zero = [0.0; 7];
        let mut steps = 0;
        loop {
            let out = env.step(&zero, &w).unwrap();
            steps += 1;
            assert!(!out.info.f_g);
            if out.done {
                break;
            }
        }
        assert_eq!(steps, 300);
        assert!(!env.success);
        assert_eq!(env.step(&zero, &w), Err(Error::EpisodeFinished));
    }

    #[test]
    fn incompatible_task_is_rejected() {
        let bad = TaskSpec {
            id: "lid-pick".into(),
            object: lid(),
            skill: Skill::Pick,
        };
        assert!(Env::reset(&EpisodeConfig::default(), &bad, &gripper_bot(), 0).is_err());
    }
}
