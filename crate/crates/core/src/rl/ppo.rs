//! Clipped-surrogate PPO: configuration, update step, training loop and
//! evaluation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::env::EpisodeConfig;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::observation::ObservationLayout;
use crate::reward::RewardWeights;
use crate::rl::adam::{clip_grad_norm, Adam};
use crate::rl::gae::normalize;
use crate::rl::mlp::{ForwardCache, Mlp};
use crate::rl::policy::{entropy, log_prob, GaussianPolicy, MIN_LOG_STD};
use crate::rl::rollout::{check_dims, EpisodeSummary, RolloutBatch, Sampling, VecEnv};
use crate::rng::{Stream, StreamRng};
use crate::robot::RobotSpec;
use crate::world::TaskSpec;

/// Evaluation episodes are numbered from here so they never coincide with
/// training episodes drawn from the same seed.
pub const EVAL_EPISODE_OFFSET: u64 = 1 << 48;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PpoConfig {
    pub num_envs: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub rollout_horizon: usize,
    pub minibatches: usize,
    pub epochs_per_iter: usize,
    pub clip_ratio: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub grad_clip: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Initial standard deviation in normalized action units.
    pub init_std: f64,
    /// Training episodes run to the step limit instead of ending on success.
    pub run_to_time_limit: bool,
    /// Standardize observations with running statistics.
    pub normalize_observations: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            num_envs: 64,
            learning_rate: 1e-3,
            iterations: 500,
            rollout_horizon: 32,
            minibatches: 4,
            epochs_per_iter: 5,
            clip_ratio: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            entropy_coef: 0.0,
            value_coef: 0.5,
            grad_clip: 1.0,
            seed: 0,
            hidden: vec![1024, 1024, 512, 512],
            init_std: 0.3,
            run_to_time_limit: true,
            normalize_observations: false,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("ppo: {m}")));
        if self.num_envs == 0 || self.rollout_horizon == 0 || self.minibatches == 0 || self.epochs_per_iter == 0 {
            return bad("num_envs, rollout_horizon, minibatches and epochs_per_iter must be positive");
        }
        if self.minibatches > self.num_envs * self.rollout_horizon {
            return bad("more minibatches than samples");
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return bad("clip_ratio must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.grad_clip > 0.0 && self.init_std > 0.0) {
            return bad("learning_rate, grad_clip and init_std must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return bad("loss coefficients must be non-negative");
        }
        if self.hidden.iter().any(|h| *h == 0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }
}

/// Policy plus value network: everything a checkpoint stores.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub policy: GaussianPolicy,
    pub value: Mlp,
}

impl ActorCritic {
    pub fn init(obs_dim: usize, act_dim: usize, cfg: &PpoConfig) -> Result<ActorCritic> {
        let mut rng = StreamRng::new(cfg.seed, 0, Stream::NetInit);
        let widths = |out: usize| {
            let mut w = vec![obs_dim];
            w.extend_from_slice(&cfg.hidden);
            w.push(out);
            w
        };
        let net = Mlp::init(&widths(act_dim), 0.01, &mut rng)?;
        let value = Mlp::init(&widths(1), 1.0, &mut rng)?;
        let policy = GaussianPolicy::new(net, vec![math::ln(cfg.init_std); act_dim])?;
        Ok(ActorCritic { policy, value })
    }

    pub fn for_robot(spec: &RobotSpec, cfg: &PpoConfig) -> Result<ActorCritic> {
        ActorCritic::init(ObservationLayout::for_robot(spec).total(), spec.action_dim(), cfg)
    }

    pub fn effector_dof(&self) -> usize {
        self.policy.action_dim().saturating_sub(6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub policy_grad_norm: f64,
    pub value_grad_norm: f64,
}

/// Optimizer state carried across iterations.
#[derive(Debug, Clone)]
pub struct PpoState {
    pub nets: ActorCritic,
    pub policy_opt: Adam,
    pub value_opt: Adam,
}

impl PpoState {
    pub fn new(nets: ActorCritic, cfg: &PpoConfig) -> PpoState {
        let np = nets.policy.net.param_count() + nets.policy.action_dim();
        let nv = nets.value.param_count();
        PpoState {
            nets,
            policy_opt: Adam::new(np, cfg.learning_rate),
            value_opt: Adam::new(nv, cfg.learning_rate),
        }
    }
}

/// Per-sample clipped-surrogate term and its derivative with respect to the
/// log-probability. The gradient vanishes once the clipped branch is taken.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, unclipped)
    } else {
        (clipped, 0.0)
    }
}

fn diverged(iteration: usize, what: &str, s: &UpdateStats) -> Error {
    Error::Diverged {
        iteration,
        detail: format!(
            "non-finite {what} (policy_loss={}, value_loss={}, kl={}, policy_grad={}, value_grad={})",
            s.policy_loss, s.value_loss, s.approx_kl, s.policy_grad_norm, s.value_grad_norm
        ),
    }
}

/// Runs the configured epochs of minibatch updates on a finished batch.
pub fn ppo_update(state: &mut PpoState, batch: &RolloutBatch, cfg: &PpoConfig, iteration: usize) -> Result<UpdateStats> {
    let total = batch.len();
    let (obs_dim, act_dim) = (batch.obs_dim, batch.act_dim);
    check_dims(&state.nets.policy, &state.nets.value, obs_dim, act_dim)?;
    if batch.advantages.len() != total || batch.returns.len() != total {
        return Err(Error::DimensionMismatch {
            what: "advantages",
            expected: total,
            got: batch.advantages.len(),
        });
    }
    let mut rng = StreamRng::new(cfg.seed, iteration as u64, Stream::Shuffle);
    let mut order: Vec<usize> = (0..total).collect();
    let mut pc = ForwardCache::default();
    let mut vc = ForwardCache::default();
    let mut stats = UpdateStats::default();
    let mut count = 0.0;
    let mut grad_pi = vec![0.0; state.nets.policy.net.param_count()];
    let mut grad_std = vec![0.0; act_dim];
    let mut grad_v = vec![0.0; state.nets.value.param_count()];

    for _ in 0..cfg.epochs_per_iter {
        rng.shuffle(&mut order);
        for mb in 0..cfg.minibatches {
            let idx = &order[mb * total / cfg.minibatches..(mb + 1) * total / cfg.minibatches];
            let m = idx.len();
            let mut x = Vec::with_capacity(m * obs_dim);
            let mut adv = Vec::with_capacity(m);
            for &k in idx {
                x.extend_from_slice(&batch.observations[k * obs_dim..(k + 1) * obs_dim]);
                adv.push(batch.advantages[k]);
            }
            normalize(&mut adv);
            state.nets.policy.obs_norm.apply(&mut x);

            let policy = &state.nets.policy;
            let log_std = policy.effective_log_std();
            policy.net.forward_batch(&x, m, &mut pc)?;
            state.nets.value.forward_batch(&x, m, &mut vc)?;
            let means = pc.output();
            let inv_m = 1.0 / m as f64;

            let mut d_mean = vec![0.0; m * act_dim];
            grad_std.iter_mut().for_each(|g| *g = 0.0);
            let mut d_value = vec![0.0; m];
            let mut mb_stats = UpdateStats::default();
            for (r, &k) in idx.iter().enumerate() {
                let u = &batch.actions[k * act_dim..(k + 1) * act_dim];
                let mean = &means[r * act_dim..(r + 1) * act_dim];
                let lp = log_prob(mean, &log_std, u);
                let log_ratio = lp - batch.log_probs[k];
                let ratio = math::exp(log_ratio);
                let (surr, d_surr_d_lp) = clipped_surrogate(ratio, adv[r], cfg.clip_ratio);
                mb_stats.policy_loss -= surr * inv_m;
                mb_stats.approx_kl += ((ratio - 1.0) - log_ratio) * inv_m;
                if math::abs(ratio - 1.0) > cfg.clip_ratio {
                    mb_stats.clip_fraction += inv_m;
                }
                // Loss is the negated surrogate.
                let g = -d_surr_d_lp * inv_m;
                for j in 0..act_dim {
                    let var_inv = math::exp(-2.0 * log_std[j]);
                    let diff = u[j] - mean[j];
                    d_mean[r * act_dim + j] = g * diff * var_inv;
                    if policy.log_std[j] > MIN_LOG_STD {
                        grad_std[j] += g * (diff * diff * var_inv - 1.0);
                    }
                }
                let v = vc.output()[r];
                let err = v - batch.returns[k];
                mb_stats.value_loss += cfg.value_coef * err * err * inv_m;
                d_value[r] = 2.0 * cfg.value_coef * err * inv_m;
            }
            mb_stats.entropy = entropy(&log_std);
            for (j, g) in grad_std.iter_mut().enumerate() {
                if policy.log_std[j] > MIN_LOG_STD {
                    *g -= cfg.entropy_coef;
                }
            }

            grad_pi.iter_mut().for_each(|g| *g = 0.0);
            grad_v.iter_mut().for_each(|g| *g = 0.0);
            policy.net.backward_batch(&mut pc, &d_mean, &mut grad_pi)?;
            state.nets.value.backward_batch(&mut vc, &d_value, &mut grad_v)?;
            mb_stats.policy_grad_norm = clip_grad_norm(&mut [&mut grad_pi[..], &mut grad_std[..]], cfg.grad_clip);
            mb_stats.value_grad_norm = clip_grad_norm(&mut [&mut grad_v[..]], cfg.grad_clip);
            let finite = [
                mb_stats.policy_loss,
                mb_stats.value_loss,
                mb_stats.policy_grad_norm,
                mb_stats.value_grad_norm,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite {
                return Err(diverged(iteration, "loss", &mb_stats));
            }

            let nets = &mut state.nets;
            state
                .policy_opt
                .step(&mut [(&mut nets.policy.net.params[..], &grad_pi[..]), (&mut nets.policy.log_std[..], &grad_std[..])]);
            state.value_opt.step(&mut [(&mut nets.value.params[..], &grad_v[..])]);

            stats.policy_loss += mb_stats.policy_loss;
            stats.value_loss += mb_stats.value_loss;
            stats.entropy += mb_stats.entropy;
            stats.approx_kl += mb_stats.approx_kl;
            stats.clip_fraction += mb_stats.clip_fraction;
            stats.policy_grad_norm += mb_stats.policy_grad_norm;
            stats.value_grad_norm += mb_stats.value_grad_norm;
            count += 1.0;
        }
    }
    for v in [
        &mut stats.policy_loss,
        &mut stats.value_loss,
        &mut stats.entropy,
        &mut stats.approx_kl,
        &mut stats.clip_fraction,
        &mut stats.policy_grad_norm,
        &mut stats.value_grad_norm,
    ] {
        *v /= count;
    }
    Ok(stats)
}

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    /// Mean return of episodes that ended during the iteration (carried over
    /// from the previous iteration when none ended).
    pub mean_return: f64,
    pub success_rate: f64,
    pub episodes_finished: usize,
    pub update: UpdateStats,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub nets: ActorCritic,
    pub curve: Vec<IterationStats>,
}

/// Trains one policy for one (robot, task) pair.
pub fn train<E: Executor>(
    task: &TaskSpec,
    spec: &RobotSpec,
    cfg: &PpoConfig,
    episode: &EpisodeConfig,
    weights: &RewardWeights,
    exec: &E,
    mut on_iteration: impl FnMut(&IterationStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    weights.validate()?;
    let mut ep_cfg = episode.clone();
    ep_cfg.seed = cfg.seed;
    if cfg.run_to_time_limit {
        ep_cfg.terminate_on_success = false;
    }
    let mut state = PpoState::new(ActorCritic::for_robot(spec, cfg)?, cfg);
    let mut curve = Vec::with_capacity(cfg.iterations);
    if cfg.iterations == 0 {
        return Ok(TrainOutcome { nets: state.nets, curve });
    }
    let mut envs = VecEnv::new(task, spec, &ep_cfg, weights, cfg.num_envs, true, 0)?;
    let (mut last_return, mut last_success) = (0.0, 0.0);
    for iteration in 0..cfg.iterations {
        let (mut batch, finished) = envs.collect(
            &mut state.nets.policy,
            false,
            &state.nets.value,
            cfg.rollout_horizon,
            Sampling::Stochastic,
            exec,
        )?;
        batch.finish(cfg.gamma, cfg.gae_lambda).map_err(|e| match e {
            Error::Diverged { detail, .. } => Error::Diverged { iteration, detail },
            other => other,
        })?;
        let update = ppo_update(&mut state, &batch, cfg, iteration)?;
        // Statistics move only between iterations so that collection and
        // update see identical inputs.
        if cfg.normalize_observations {
            state.nets.policy.obs_norm.update(&batch.observations, batch.len());
        }
        if !finished.is_empty() {
            let n = finished.len() as f64;
            last_return = finished.iter().map(|f| f.total_return).sum::<f64>() / n;
            last_success = finished.iter().filter(|f| f.success).count() as f64 / n;
        }
        let row = IterationStats {
            iteration,
            mean_return: last_return,
            success_rate: last_success,
            episodes_finished: finished.len(),
            update,
        };
        on_iteration(&row);
        curve.push(row);
    }
    Ok(TrainOutcome { nets: state.nets, curve })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub success_rate: f64,
    pub episodes: Vec<EpisodeSummary>,
}

/// Runs `n_episodes` with mean actions and the given episode config (its
/// seed keys the episodes).
pub fn evaluate<E: Executor>(
    policy: &GaussianPolicy,
    task: &TaskSpec,
    spec: &RobotSpec,
    episode: &EpisodeConfig,
    weights: &RewardWeights,
    n_episodes: usize,
    exec: &E,
) -> Result<EvalReport> {
    if n_episodes == 0 {
        return Err(Error::NoEpisodes);
    }
    let layout = ObservationLayout::for_robot(spec);
    if policy.net.input_dim() != layout.total() || policy.action_dim() != spec.action_dim() {
        return Err(Error::DimensionMismatch {
            what: "checkpoint",
            expected: layout.total(),
            got: policy.net.input_dim(),
        });
    }
    let mut envs = VecEnv::new(task, spec, episode, weights, n_episodes, false, EVAL_EPISODE_OFFSET)?;
    let episodes = envs.run_to_end(policy, exec)?;
    let successes = episodes.iter().filter(|e| e.success).count();
    Ok(EvalReport {
        success_rate: successes as f64 / n_episodes as f64,
        episodes,
    })
}
