//! Trajectory records: capture, offline verification, replay and statistics.
//!
//! A trajectory stores the initial state `S_0` and, for every step
//! `t = 1..=T`, the state after the step, the commanded action, the reward
//! terms and the observation. All positions are in the world frame.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::control::Controller;
use crate::env::{EpisodeConfig, Env};
use crate::error::{Error, Result};
use crate::geometry::{RotVec, Transform, Vec3};
use crate::math;
use crate::observation::{build_observation, ObservationInputs};
use crate::reward::{grasp_flag, total_reward, RewardSnapshot, RewardTerms, RewardWeights};
use crate::robot::{forward_kinematics, RobotSpec};
use crate::world::{grasp_point, part_rotation, ObjectState, Skill, TaskSpec};

/// Everything that changes during an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
    pub wrist_pose: Transform,
    /// Executed (clamped) action of the step that produced this state.
    pub prev_action: Vec<f64>,
    pub ik_warning: bool,
    pub object: ObjectState,
    pub grasp: Vec3,
    pub goal: Vec3,
    pub f_g: bool,
}

fn push_transform(out: &mut Vec<f64>, t: &Transform) {
    out.extend(t.translation.to_array());
    out.extend(t.rotation.0.to_array());
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

struct Reader<'a> {
    data: &'a [f64],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [f64]> {
        let end = self.at + n;
        if end > self.data.len() {
            return Err(Error::DimensionMismatch {
                what: "encoded record",
                expected: end,
                got: self.data.len(),
            });
        }
        let s = &self.data[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn one(&mut self) -> Result<f64> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool> {
        match self.one()? {
            v if v == 0.0 => Ok(false),
            v if v == 1.0 => Ok(true),
            v => Err(Error::InvalidConfig(format!("flag field holds {v}"))),
        }
    }

    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::from_slice(self.take(3)?))
    }

    fn transform(&mut self) -> Result<Transform> {
        let t = self.vec3()?;
        let r = self.vec3()?;
        Ok(Transform::new(t, RotVec(r)))
    }
}

impl StateSnapshot {
    pub fn capture(env: &Env) -> StateSnapshot {
        StateSnapshot {
            q: env.robot.q.clone(),
            qdot: env.robot.qdot.clone(),
            qddot: env.robot.qddot.clone(),
            wrist_pose: env.robot.wrist_pose,
            prev_action: env.robot.prev_action.clone(),
            ik_warning: env.robot.ik_warning,
            object: env.object.clone(),
            grasp: env.grasp_point(),
            goal: env.goal,
            f_g: env.f_g,
        }
    }

    /// Number of encoded values for a robot.
    pub fn width(spec: &RobotSpec) -> usize {
        3 * spec.joint_count() + spec.action_dim() + 29
    }

    /// Appends the fixed field order: q, qdot, qddot, wrist pose, previous
    /// action, IK warning, joint value, free pose, attached, offset present,
    /// offset, grasp, goal, f_g. Poses are translation then rotation vector;
    /// flags are 0 or 1.
    pub fn encode(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.q);
        out.extend_from_slice(&self.qdot);
        out.extend_from_slice(&self.qddot);
        push_transform(out, &self.wrist_pose);
        out.extend_from_slice(&self.prev_action);
        out.push(flag(self.ik_warning));
        out.push(self.object.joint_value);
        push_transform(out, &self.object.free_pose);
        out.push(flag(self.object.attached));
        out.push(flag(self.object.attach_offset.is_some()));
        push_transform(out, &self.object.attach_offset.unwrap_or_default());
        out.extend(self.grasp.to_array());
        out.extend(self.goal.to_array());
        out.push(flag(self.f_g));
    }

    pub fn decode(spec: &RobotSpec, data: &[f64]) -> Result<StateSnapshot> {
        if data.len() != StateSnapshot::width(spec) {
            return Err(Error::DimensionMismatch {
                what: "state snapshot",
                expected: StateSnapshot::width(spec),
                got: data.len(),
            });
        }
        let n = spec.joint_count();
        let mut r = Reader { data, at: 0 };
        let q = r.take(n)?.to_vec();
        let qdot = r.take(n)?.to_vec();
        let qddot = r.take(n)?.to_vec();
        let wrist_pose = r.transform()?;
        let prev_action = r.take(spec.action_dim())?.to_vec();
        let ik_warning = r.flag()?;
        let joint_value = r.one()?;
        let free_pose = r.transform()?;
        let attached = r.flag()?;
        let has_offset = r.flag()?;
        let offset = r.transform()?;
        let grasp = r.vec3()?;
        let goal = r.vec3()?;
        let f_g = r.flag()?;
        Ok(StateSnapshot {
            q,
            qdot,
            qddot,
            wrist_pose,
            prev_action,
            ik_warning,
            object: ObjectState {
                joint_value,
                free_pose,
                attached,
                attach_offset: has_offset.then_some(offset),
            },
            grasp,
            goal,
            f_g,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    pub state: StateSnapshot,
    /// Commanded action as passed to the environment.
    pub action: Vec<f64>,
    pub terms: RewardTerms,
    pub observation: Vec<f64>,
}

impl StepRecord {
    pub fn width(spec: &RobotSpec, obs_dim: usize) -> usize {
        1 + StateSnapshot::width(spec) + spec.action_dim() + 7 + obs_dim
    }

    /// `t`, state, action, reward terms (r_d, r_a, r_g, r_m, r_s, f_g,
    /// total), observation.
    pub fn encode(&self, out: &mut Vec<f64>) {
        out.push(self.t as f64);
        self.state.encode(out);
        out.extend_from_slice(&self.action);
        let r = &self.terms;
        out.extend([r.r_d, r.r_a, r.r_g, r.r_m, r.r_s, flag(r.f_g), r.total]);
        out.extend_from_slice(&self.observation);
    }

    pub fn decode(spec: &RobotSpec, obs_dim: usize, data: &[f64]) -> Result<StepRecord> {
        if data.len() != StepRecord::width(spec, obs_dim) {
            return Err(Error::DimensionMismatch {
                what: "step record",
                expected: StepRecord::width(spec, obs_dim),
                got: data.len(),
            });
        }
        let t = data[0];
        if !(t >= 1.0 && t == math::round(t)) {
            return Err(Error::InvalidConfig(format!("step index {t} is not a positive integer")));
        }
        let sw = StateSnapshot::width(spec);
        let state = StateSnapshot::decode(spec, &data[1..1 + sw])?;
        let mut r = Reader { data, at: 1 + sw };
        let action = r.take(spec.action_dim())?.to_vec();
        let v = r.take(6)?;
        let f_g = Reader { data: &v[5..6], at: 0 }.flag()?;
        let terms = RewardTerms {
            r_d: v[0],
            r_a: v[1],
            r_g: v[2],
            r_m: v[3],
            r_s: v[4],
            f_g,
            total: r.one()?,
        };
        let observation = r.take(obs_dim)?.to_vec();
        Ok(StepRecord {
            t: t as usize,
            state,
            action,
            terms,
            observation,
        })
    }
}

/// One recorded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `"<skill> <category>"`.
    pub instruction: String,
    pub robot: String,
    pub task_id: String,
    pub seed: u64,
    pub episode: u64,
    pub config: EpisodeConfig,
    pub weights: RewardWeights,
    /// World pose of the placed object.
    pub object_base: Transform,
    /// World pose of the robot base at zero base joints.
    pub anchor: Transform,
    pub palm_init_rotation: RotVec,
    pub effector_init: Vec<f64>,
    pub initial: StateSnapshot,
    pub initial_observation: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub success: bool,
}

impl Trajectory {
    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.initial_observation.len()
    }

    /// Task with the object placed where it was recorded.
    pub fn task(&self) -> Result<TaskSpec> {
        let mut task = TaskSpec::by_id(&self.task_id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task {:?}", self.task_id)))?;
        task.object.base_pose = self.object_base;
        Ok(task)
    }

    pub fn category(&self) -> Result<String> {
        Ok(self.task()?.object.category_label.to_string())
    }

    pub fn skill(&self) -> Result<Skill> {
        Ok(self.task()?.skill)
    }
}

fn start(
    task: &TaskSpec,
    spec: &RobotSpec,
    config: &EpisodeConfig,
    seed: u64,
    episode: u64,
    weights: &RewardWeights,
) -> Result<(Env, Trajectory)> {
    let cfg = EpisodeConfig { seed, ..config.clone() };
    let (env, obs) = Env::reset(&cfg, task, spec, episode)?;
    let traj = Trajectory {
        instruction: task.instruction(),
        robot: spec.name.to_string(),
        task_id: task.id.clone(),
        seed,
        episode,
        config: cfg,
        weights: *weights,
        object_base: env.task.object.base_pose,
        anchor: env.robot.anchor,
        palm_init_rotation: env.palm_init_rotation,
        effector_init: env.effector_init.clone(),
        initial: StateSnapshot::capture(&env),
        initial_observation: obs.values,
        steps: Vec::new(),
        success: false,
    };
    Ok((env, traj))
}

/// Rolls episodes with seeds `seed, seed + 1, …` (at most `retries + 1`)
/// until one succeeds and returns it. Episodes end on success.
pub fn record_rollout(
    controller: &mut dyn Controller,
    task: &TaskSpec,
    spec: &RobotSpec,
    config: &EpisodeConfig,
    weights: &RewardWeights,
    seed: u64,
    episode: u64,
    retries: usize,
) -> Result<Option<Trajectory>> {
    let config = EpisodeConfig {
        terminate_on_success: true,
        ..config.clone()
    };
    for attempt in 0..=retries as u64 {
        let (mut env, mut traj) = start(task, spec, &config, seed + attempt, episode, weights)?;
        while !env.done {
            let action = controller.act(&env)?;
            let out = env.step(&action, weights)?;
            traj.steps.push(StepRecord {
                t: env.t,
                state: StateSnapshot::capture(&env),
                action,
                terms: out.info.terms,
                observation: out.observation.values,
            });
        }
        if env.success {
            traj.success = true;
            return Ok(Some(traj));
        }
    }
    Ok(None)
}

fn mismatch(t: usize, what: &str) -> Error {
    Error::TrajectoryMismatch(format!("step {t}: {what}"))
}

/// Checks a trajectory against the model without running the simulator:
/// step indices, instruction, grasp flags, reward terms and observations
/// are recomputed from the stored states and must match exactly.
pub fn verify(traj: &Trajectory, spec: &RobotSpec) -> Result<()> {
    let task = traj.task()?;
    if traj.instruction != task.instruction() {
        return Err(Error::TrajectoryMismatch(format!("instruction {:?}", traj.instruction)));
    }
    if traj.robot != spec.name {
        return Err(Error::TrajectoryMismatch(format!("robot {:?}", traj.robot)));
    }
    let obj = &task.object;
    let w = &traj.weights;
    let mut prev = &traj.initial;
    let check_state = |t: usize, s: &StateSnapshot, prev_q: &[f64]| -> Result<Vec<f64>> {
        let kin = forward_kinematics(spec, &traj.anchor, &s.q)?;
        if grasp_point(obj, &s.object) != s.grasp {
            return Err(mismatch(t, "grasp point"));
        }
        if grasp_flag(&kin.hand_positions(), s.grasp, w.grasp_threshold)? != s.f_g {
            return Err(mismatch(t, "grasp flag"));
        }
        let obs = build_observation(&ObservationInputs {
            spec,
            anchor: &traj.anchor,
            t,
            max_steps: traj.config.max_steps,
            dt: traj.config.dt,
            q: &s.q,
            prev_q,
            qdot: &s.qdot,
            qddot: &s.qddot,
            prev_action: &s.prev_action,
            grasp: s.grasp,
            part_rotation: part_rotation(obj, &s.object),
            goal: s.goal,
        })?;
        Ok(obs.values)
    };
    if check_state(0, &traj.initial, &traj.initial.q)? != traj.initial_observation {
        return Err(mismatch(0, "observation"));
    }
    for (i, step) in traj.steps.iter().enumerate() {
        let t = i + 1;
        if step.t != t {
            return Err(mismatch(t, "step index"));
        }
        let s = &step.state;
        if check_state(t, s, &prev.q)? != step.observation {
            return Err(mismatch(t, "observation"));
        }
        let kin = forward_kinematics(spec, &traj.anchor, &s.q)?;
        let terms = total_reward(
            &RewardSnapshot {
                hand_points: &kin.hand_positions(),
                palm_position: kin.palm.origin,
                palm_rotation: kin.palm.rotvec(),
                palm_init_rotation: traj.palm_init_rotation,
                grasp: s.grasp,
                goal: s.goal,
                effector_init: &traj.effector_init,
            },
            &s.prev_action,
            w,
        )?;
        if terms != step.terms {
            return Err(mismatch(t, "reward"));
        }
        prev = s;
    }
    if traj.success {
        let last = traj.steps.last().ok_or_else(|| mismatch(0, "successful trajectory without steps"))?;
        if last.state.grasp.distance(last.state.goal) >= w.success_threshold {
            return Err(mismatch(last.t, "final goal distance"));
        }
    }
    Ok(())
}

/// Re-executes the recorded actions in a fresh environment and requires the
/// state stream, rewards and observations to match bit for bit.
pub fn replay(traj: &Trajectory, spec: &RobotSpec) -> Result<()> {
    let task = TaskSpec::by_id(&traj.task_id)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown task {:?}", traj.task_id)))?;
    let (mut env, obs) = Env::reset(&traj.config, &task, spec, traj.episode)?;
    let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
    let mut enc = (Vec::new(), Vec::new());
    let mut same_state = |a: &StateSnapshot, b: &StateSnapshot| {
        enc.0.clear();
        enc.1.clear();
        a.encode(&mut enc.0);
        b.encode(&mut enc.1);
        same(&enc.0, &enc.1)
    };
    if env.task.object.base_pose != traj.object_base || env.robot.anchor != traj.anchor {
        return Err(mismatch(0, "placement"));
    }
    if !same_state(&StateSnapshot::capture(&env), &traj.initial) || !same(&obs.values, &traj.initial_observation) {
        return Err(mismatch(0, "initial state"));
    }
    for step in &traj.steps {
        let out = env.step(&step.action, &traj.weights)?;
        if !same_state(&StateSnapshot::capture(&env), &step.state) {
            return Err(mismatch(step.t, "state"));
        }
        if out.info.terms != step.terms || !same(&out.observation.values, &step.observation) {
            return Err(mismatch(step.t, "reward or observation"));
        }
    }
    if env.success != traj.success || !env.done {
        return Err(mismatch(traj.steps.len(), "episode end"));
    }
    Ok(())
}

/// Maps a depth in meters to an 8-bit value: clip to [0, 5] m, scale by
/// 255/5 and round half away from zero. Non-finite depths map to 255.
pub fn depth_normalize(raw: f64) -> u8 {
    if !raw.is_finite() {
        return 255;
    }
    math::round(raw.clamp(0.0, 5.0) * (255.0 / 5.0)) as u8
}

/// Width of the length histogram bins, in frames.
pub const LENGTH_BIN: usize = 50;

/// What the statistics need from one trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySummary {
    pub category: String,
    pub skill: String,
    pub length: usize,
}

impl TrajectorySummary {
    pub fn of(traj: &Trajectory) -> Result<TrajectorySummary> {
        Ok(TrajectorySummary {
            category: traj.category()?,
            skill: traj.skill()?.as_str().to_string(),
            length: traj.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetStats {
    /// Successful trajectories per (category, skill).
    pub counts: BTreeMap<(String, String), usize>,
    /// Bin start → count.
    pub histogram: BTreeMap<usize, usize>,
    pub total: usize,
    pub mean_length: f64,
}

impl DatasetStats {
    pub fn from_summaries<'a>(items: impl IntoIterator<Item = &'a TrajectorySummary>) -> DatasetStats {
        let mut s = DatasetStats::default();
        let mut sum = 0usize;
        for it in items {
            *s.counts.entry((it.category.clone(), it.skill.clone())).or_default() += 1;
            *s.histogram.entry(it.length / LENGTH_BIN * LENGTH_BIN).or_default() += 1;
            sum += it.length;
            s.total += 1;
        }
        if s.total > 0 {
            s.mean_length = sum as f64 / s.total as f64;
        }
        s
    }

    /// Trajectory count per skill over all categories.
    pub fn skill_count(&self, skill: &str) -> usize {
        self.counts.iter().filter(|((_, s), _)| s == skill).map(|(_, n)| n).sum()
    }

    /// Comma-separated report: a skill × category count table, the length
    /// histogram and the mean length.
    pub fn report(&self) -> String {
        let mut cats: Vec<&str> = self.counts.keys().map(|(c, _)| c.as_str()).collect();
        cats.dedup();
        let mut out = String::from("skill");
        for c in &cats {
            out.push(',');
            out.push_str(c);
        }
        out.push_str(",total\n");
        for skill in Skill::ALL {
            let name = skill.as_str();
            out.push_str(name);
            for c in &cats {
                let n = self.counts.get(&(c.to_string(), name.to_string())).copied().unwrap_or(0);
                out.push_str(&format!(",{n}"));
            }
            out.push_str(&format!(",{}\n", self.skill_count(name)));
        }
        out.push_str("\nlength_bin,count\n");
        for (bin, n) in &self.histogram {
            out.push_str(&format!("{}-{},{}\n", bin, bin + LENGTH_BIN - 1, n));
        }
        out.push_str(&format!("\ntrajectories,{}\nmean_length,{}\n", self.total, self.mean_length));
        out
    }
}
