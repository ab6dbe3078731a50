//! Controllers that produce actions from an environment.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::Env;
use crate::error::Result;
use crate::reward::reference_approach_action;
use crate::rl::{ActionScale, GaussianPolicy};
use crate::robot::ActionLimits;

pub trait Controller {
    fn act(&mut self, env: &Env) -> Result<Vec<f64>>;
}

/// Follows the reference approach action until the grasp flag is set, then
/// moves the palm straight at the goal.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedController;

impl Controller for ScriptedController {
    fn act(&mut self, env: &Env) -> Result<Vec<f64>> {
        let kin = env.kinematics()?;
        let mut a = reference_approach_action(
            kin.palm.origin,
            kin.palm.rotvec(),
            env.palm_init_rotation,
            env.grasp_point(),
            &env.effector_init,
        );
        if env.f_g {
            let to_goal = env.goal - kin.palm.origin;
            a[..3].copy_from_slice(&to_goal.to_array());
        }
        Ok(a)
    }
}

/// Always outputs zeros.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullController;

impl Controller for NullController {
    fn act(&mut self, env: &Env) -> Result<Vec<f64>> {
        Ok(vec![0.0; env.spec.action_dim()])
    }
}

/// Executes the mean action of a trained policy.
#[derive(Debug, Clone)]
pub struct PolicyController<'a> {
    pub policy: &'a GaussianPolicy,
    pub scale: ActionScale,
}

impl<'a> PolicyController<'a> {
    pub fn new(policy: &'a GaussianPolicy, spec: &crate::robot::RobotSpec) -> PolicyController<'a> {
        PolicyController {
            policy,
            scale: ActionScale::for_robot(spec, &ActionLimits::default()),
        }
    }
}

impl Controller for PolicyController<'_> {
    fn act(&mut self, env: &Env) -> Result<Vec<f64>> {
        let obs = env.observation()?;
        Ok(self.scale.to_physical(&self.policy.mean(&obs.values)?))
    }
}

/// Runs one episode to termination; returns `(success, steps)`.
pub fn run_episode(env: &mut Env, controller: &mut dyn Controller, weights: &crate::reward::RewardWeights) -> Result<(bool, usize)> {
    while !env.done {
        let a = controller.act(env)?;
        env.step(&a, weights)?;
    }
    Ok((env.success, env.t))
}
