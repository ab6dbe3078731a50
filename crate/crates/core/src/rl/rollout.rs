//! Vectorized environments and on-policy rollout collection.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::{EpisodeConfig, Env};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::reward::RewardWeights;
use crate::rl::gae::compute_gae;
use crate::rl::mlp::{ForwardCache, Mlp};
use crate::rl::policy::{log_prob, ActionScale, GaussianPolicy};
use crate::rng::{Stream, StreamRng};
use crate::robot::{ActionLimits, RobotSpec};
use crate::world::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Draw from the Gaussian.
    Stochastic,
    /// Use the mean.
    Deterministic,
}

/// A finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub slot: usize,
    pub total_return: f64,
    pub success: bool,
    pub steps: usize,
    pub final_distance: f64,
}

/// Flat, time-major (`horizon × num_envs`) transition storage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBatch {
    pub num_envs: usize,
    pub horizon: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub observations: Vec<f64>,
    /// Normalized, unclamped samples.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Value of each env's state after the last step.
    pub bootstrap: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.num_envs * self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fills `advantages` and `returns` env by env.
    pub fn finish(&mut self, gamma: f64, lambda: f64) -> Result<()> {
        let (n, h) = (self.num_envs, self.horizon);
        self.advantages = vec![0.0; n * h];
        self.returns = vec![0.0; n * h];
        let column = |v: &[f64], i: usize| -> Vec<f64> { (0..h).map(|t| v[t * n + i]).collect() };
        for i in 0..n {
            let r = column(&self.rewards, i);
            let v = column(&self.values, i);
            let d: Vec<bool> = (0..h).map(|t| self.dones[t * n + i]).collect();
            let (adv, ret) = compute_gae(&r, &v, &d, self.bootstrap[i], gamma, lambda)?;
            for t in 0..h {
                self.advantages[t * n + i] = adv[t];
                self.returns[t * n + i] = ret[t];
            }
        }
        if self.advantages.iter().any(|a| !a.is_finite()) {
            return Err(Error::Diverged {
                iteration: 0,
                detail: "non-finite advantage".into(),
            });
        }
        Ok(())
    }
}

struct Slot {
    env: Env,
    noise: StreamRng,
    started: u64,
    obs: Vec<f64>,
    episode_return: f64,
    // Per-tick outputs.
    u: Vec<f64>,
    log_prob: f64,
    reward: f64,
    done: bool,
    finished: Option<EpisodeSummary>,
    error: Option<Error>,
}

/// A fixed set of environments that reset themselves when an episode ends.
///
/// Slot `i` plays episodes `i, i + n, i + 2n, …` and draws exploration noise
/// from its own stream, so results do not depend on how slots are scheduled.
pub struct VecEnv {
    pub task: TaskSpec,
    pub spec: RobotSpec,
    pub config: EpisodeConfig,
    pub weights: RewardWeights,
    pub scale: ActionScale,
    /// Reset finished slots; otherwise they sit idle once done.
    pub auto_reset: bool,
    /// Added to every episode id.
    pub episode_offset: u64,
    slots: Vec<Slot>,
}

impl VecEnv {
    pub fn new(
        task: &TaskSpec,
        spec: &RobotSpec,
        config: &EpisodeConfig,
        weights: &RewardWeights,
        num_envs: usize,
        auto_reset: bool,
        episode_offset: u64,
    ) -> Result<VecEnv> {
        if num_envs == 0 {
            return Err(Error::NoEpisodes);
        }
        let mut slots = Vec::with_capacity(num_envs);
        for i in 0..num_envs {
            let episode = episode_offset + i as u64;
            let (env, obs) = Env::reset(config, task, spec, episode)?;
            slots.push(Slot {
                env,
                noise: StreamRng::new(config.seed, episode_offset + i as u64, Stream::ActionNoise),
                started: 1,
                obs: obs.values,
                episode_return: 0.0,
                u: Vec::new(),
                log_prob: 0.0,
                reward: 0.0,
                done: false,
                finished: None,
                error: None,
            });
        }
        Ok(VecEnv {
            task: task.clone(),
            spec: spec.clone(),
            config: config.clone(),
            weights: *weights,
            scale: ActionScale::for_robot(spec, &ActionLimits::default()),
            auto_reset,
            episode_offset,
            slots,
        })
    }

    pub fn num_envs(&self) -> usize {
        self.slots.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.slots[0].obs.len()
    }

    pub fn env(&self, i: usize) -> &Env {
        &self.slots[i].env
    }

    pub fn all_done(&self) -> bool {
        self.slots.iter().all(|s| s.env.done)
    }

    /// Row-major observations of the given slots.
    fn gather(&self, active: &[usize]) -> Vec<f64> {
        let mut x = Vec::with_capacity(active.len() * self.obs_dim());
        for &i in active {
            x.extend_from_slice(&self.slots[i].obs);
        }
        x
    }

    /// Advances every active slot by one step using the policy means in
    /// `means` (one row per slot in `active` order).
    fn tick<E: Executor>(
        &mut self,
        exec: &E,
        active: &[usize],
        means: &[f64],
        log_std: &[f64],
        sampling: Sampling,
    ) -> Result<Vec<EpisodeSummary>> {
        let a_dim = log_std.len();
        let mut row_of = vec![usize::MAX; self.slots.len()];
        for (r, &i) in active.iter().enumerate() {
            row_of[i] = r;
        }
        let (task, spec, config, weights, scale) = (&self.task, &self.spec, &self.config, &self.weights, &self.scale);
        let (auto_reset, offset, n) = (self.auto_reset, self.episode_offset, self.slots.len() as u64);
        exec.for_each(&mut self.slots, &|i, slot: &mut Slot| {
            let r = row_of[i];
            if r == usize::MAX {
                return;
            }
            slot.finished = None;
            slot.error = None;
            let mean = &means[r * a_dim..(r + 1) * a_dim];
            slot.u.clear();
            match sampling {
                Sampling::Deterministic => slot.u.extend_from_slice(mean),
                Sampling::Stochastic => {
                    for (m, s) in mean.iter().zip(log_std) {
                        let std = libm::exp(*s);
                        slot.u.push(m + std * slot.noise.normal());
                    }
                }
            }
            slot.log_prob = log_prob(mean, log_std, &slot.u);
            let action = scale.to_physical(&slot.u);
            let out = match slot.env.step(&action, weights) {
                Ok(o) => o,
                Err(e) => {
                    slot.error = Some(e);
                    return;
                }
            };
            slot.reward = out.reward;
            slot.done = out.done;
            slot.episode_return += out.reward;
            slot.obs = out.observation.values;
            if out.done {
                slot.finished = Some(EpisodeSummary {
                    episode: slot.env.episode,
                    slot: i,
                    total_return: slot.episode_return,
                    success: slot.env.success,
                    steps: slot.env.t,
                    final_distance: slot.env.goal_distance(),
                });
                if auto_reset {
                    let episode = offset + slot.started * n + i as u64;
                    match Env::reset(config, task, spec, episode) {
                        Ok((env, obs)) => {
                            slot.env = env;
                            slot.obs = obs.values;
                            slot.started += 1;
                            slot.episode_return = 0.0;
                        }
                        Err(e) => slot.error = Some(e),
                    }
                }
            }
        });
        let mut finished = Vec::new();
        for &i in active {
            if let Some(e) = self.slots[i].error.take() {
                return Err(e);
            }
            if let Some(f) = self.slots[i].finished {
                finished.push(f);
            }
        }
        Ok(finished)
    }

    /// Steps every slot `horizon` times with sampled actions.
    ///
    /// With `update_normalizer` the policy's observation statistics absorb
    /// every tick's raw observations before they are used. The batch keeps
    /// raw observations.
    pub fn collect<E: Executor>(
        &mut self,
        policy: &mut GaussianPolicy,
        update_normalizer: bool,
        value: &Mlp,
        horizon: usize,
        sampling: Sampling,
        exec: &E,
    ) -> Result<(RolloutBatch, Vec<EpisodeSummary>)> {
        let n = self.num_envs();
        let (obs_dim, act_dim) = (self.obs_dim(), policy.action_dim());
        check_dims(policy, value, obs_dim, self.spec.action_dim())?;
        let log_std = policy.effective_log_std();
        let all: Vec<usize> = (0..n).collect();
        let mut batch = RolloutBatch {
            num_envs: n,
            horizon,
            obs_dim,
            act_dim,
            ..Default::default()
        };
        let mut finished = Vec::new();
        let mut pc = ForwardCache::default();
        let mut vc = ForwardCache::default();
        for _ in 0..horizon {
            let raw = self.gather(&all);
            if update_normalizer {
                policy.obs_norm.update(&raw, n);
            }
            let mut x = raw.clone();
            policy.obs_norm.apply(&mut x);
            policy.net.forward_batch(&x, n, &mut pc)?;
            value.forward_batch(&x, n, &mut vc)?;
            batch.values.extend_from_slice(vc.output());
            batch.observations.extend_from_slice(&raw);
            finished.extend(self.tick(exec, &all, pc.output(), &log_std, sampling)?);
            for s in &self.slots {
                batch.actions.extend_from_slice(&s.u);
                batch.log_probs.push(s.log_prob);
                batch.rewards.push(s.reward);
                batch.dones.push(s.done);
            }
        }
        let mut x = self.gather(&all);
        policy.obs_norm.apply(&mut x);
        value.forward_batch(&x, n, &mut vc)?;
        batch.bootstrap = vc.output().to_vec();
        Ok((batch, finished))
    }

    /// Runs every slot to the end of its current episode with mean actions.
    /// Requires `auto_reset == false`.
    pub fn run_to_end<E: Executor>(&mut self, policy: &GaussianPolicy, exec: &E) -> Result<Vec<EpisodeSummary>> {
        let obs_dim = self.obs_dim();
        if policy.net.input_dim() != obs_dim || policy.action_dim() != self.spec.action_dim() {
            return Err(Error::DimensionMismatch {
                what: "policy",
                expected: obs_dim,
                got: policy.net.input_dim(),
            });
        }
        let log_std = policy.effective_log_std();
        let mut cache = ForwardCache::default();
        let mut finished = Vec::new();
        loop {
            let active: Vec<usize> = (0..self.num_envs()).filter(|&i| !self.slots[i].env.done).collect();
            if active.is_empty() {
                break;
            }
            let mut x = self.gather(&active);
            policy.obs_norm.apply(&mut x);
            policy.net.forward_batch(&x, active.len(), &mut cache)?;
            finished.extend(self.tick(exec, &active, cache.output(), &log_std, Sampling::Deterministic)?);
        }
        finished.sort_by_key(|f| f.episode);
        Ok(finished)
    }
}

pub(crate) fn check_dims(policy: &GaussianPolicy, value: &Mlp, obs_dim: usize, act_dim: usize) -> Result<()> {
    for (what, got, expected) in [
        ("policy input", policy.net.input_dim(), obs_dim),
        ("value input", value.input_dim(), obs_dim),
        ("policy output", policy.action_dim(), act_dim),
        ("value output", value.output_dim(), 1),
    ] {
        if got != expected {
            return Err(Error::DimensionMismatch { what, expected, got });
        }
    }
    Ok(())
}
