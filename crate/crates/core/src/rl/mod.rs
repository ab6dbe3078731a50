//! From-scratch PPO: dense networks, Gaussian policy, GAE, rollouts and
//! the training/evaluation loops.

pub mod adam;
pub mod gae;
pub mod mlp;
pub mod policy;
pub mod ppo;
pub mod rollout;

pub use gae::compute_gae;
pub use mlp::{ForwardCache, Mlp};
pub use policy::{ActionScale, GaussianPolicy, ObsNormalizer};
pub use ppo::{evaluate, ppo_update, train, ActorCritic, EvalReport, IterationStats, PpoConfig, PpoState, TrainOutcome, UpdateStats};
pub use rollout::{EpisodeSummary, RolloutBatch, Sampling, VecEnv};
