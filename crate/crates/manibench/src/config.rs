//! Run configuration documents (TOML). Every key is optional; unknown keys
//! are rejected.
//!
//! ```toml
//! robot = "gripper-bot"
//! task = "lid-open"
//! seed = 0
//! out = "runs/lid"
//!
//! [ppo]
//! iterations = 300
//!
//! [episode]
//! max_steps = 300
//! ```

use std::path::PathBuf;

use manibench_core::env::EpisodeConfig;
use manibench_core::reward::RewardWeights;
use manibench_core::rl::PpoConfig;
use manibench_core::robot::RobotSpec;
use manibench_core::world::{Skill, TaskSpec};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// Mean actions of a checkpointed policy.
    Policy,
    /// Reference approach, then straight to the goal.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixCell {
    pub robot: String,
    pub task: String,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub controller: Option<ControllerKind>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub cells: Vec<MatrixCell>,
}

/// Paired mobile/fixed evaluation. Absent checkpoints mean the scripted
/// controller.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub mobile_checkpoint: Option<PathBuf>,
    pub fixed_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub robot: String,
    pub task: String,
    /// Restricts data generation to tasks with this skill.
    pub skill: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub fixed_base: bool,
    /// Evaluation episodes, or trajectories per task for data generation.
    pub episodes: Option<usize>,
    pub workers: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    pub controller: Option<ControllerKind>,
    /// Attempts beyond the first per generated trajectory.
    pub retries: usize,
    pub episode: EpisodeConfig,
    pub ppo: PpoConfig,
    pub reward: RewardWeights,
    pub matrix: Option<MatrixConfig>,
    pub ablation: Option<AblationConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            robot: "gripper-bot".into(),
            task: "lid-open".into(),
            skill: None,
            seed: 0,
            out: PathBuf::from("runs"),
            fixed_base: false,
            episodes: None,
            workers: None,
            checkpoint: None,
            controller: None,
            retries: 10,
            episode: EpisodeConfig::default(),
            ppo: PpoConfig::default(),
            reward: RewardWeights::default(),
            matrix: None,
            ablation: None,
        }
    }
}

/// Parses a document, filling absent keys with defaults. Errors carry the
/// line and column or name the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
}

impl RunConfig {
    pub fn robot_spec(&self) -> Result<RobotSpec> {
        RobotSpec::by_name(&self.robot).ok_or_else(|| Error::Config(format!("unknown robot {:?}", self.robot)))
    }

    pub fn task_spec(&self) -> Result<TaskSpec> {
        task_by_id(&self.task)
    }

    pub fn skill(&self) -> Result<Option<Skill>> {
        self.skill
            .as_deref()
            .map(|s| Skill::parse(s).ok_or_else(|| Error::Config(format!("unknown skill {s:?}"))))
            .transpose()
    }

    /// Episode settings with the run seed and base mode applied.
    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            seed: self.seed,
            fixed_base: self.fixed_base || self.episode.fixed_base,
            ..self.episode.clone()
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            seed: self.seed,
            ..self.ppo.clone()
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out.join("checkpoint.mmrl"))
    }

    /// Checks names and numeric ranges.
    pub fn validate(&self) -> Result<()> {
        self.robot_spec()?;
        self.task_spec()?;
        self.skill()?;
        let invalid = |e: manibench_core::Error| Error::Config(e.to_string());
        self.episode_config().validate().map_err(invalid)?;
        self.ppo_config().validate().map_err(invalid)?;
        self.reward.validate().map_err(invalid)?;
        if let Some(m) = &self.matrix {
            for c in &m.cells {
                RobotSpec::by_name(&c.robot).ok_or_else(|| Error::Config(format!("unknown robot {:?}", c.robot)))?;
                task_by_id(&c.task)?;
            }
        }
        Ok(())
    }
}

pub fn task_by_id(id: &str) -> Result<TaskSpec> {
    TaskSpec::by_id(id).ok_or_else(|| Error::Config(format!("unknown task {id:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let c = parse_config("seed = 7\n[ppo]\nlearning_rate = 5e-4\n[episode]\nmax_steps = 50\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.ppo.learning_rate, 5e-4);
        assert_eq!(c.ppo.num_envs, PpoConfig::default().num_envs);
        assert_eq!(c.episode.max_steps, 50);
        assert_eq!(c.ppo_config().seed, 7);
    }

    #[test]
    fn misspelled_key_is_named() {
        let e = parse_config("[ppo]\nlerning_rate = 1e-3\n").unwrap_err().to_string();
        assert!(e.contains("lerning_rate"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_config("seed = 1\nrobot = \n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn bad_names_fail_validation() {
        assert!(parse_config("robot = \"arm\"").unwrap().validate().is_err());
        assert!(parse_config("task = \"lid-pick\"").unwrap().validate().is_err());
        assert!(parse_config("skill = \"fly\"").unwrap().validate().is_err());
    }
}
