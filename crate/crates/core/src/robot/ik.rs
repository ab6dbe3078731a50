//! Damped least-squares wrist IK over the base and arm joints.

use alloc::vec::Vec;

use super::kinematics::{jacobian_at, WristJacobian};
use super::spec::{RobotSpec, IK_DOF};
use crate::error::{Error, Result};
use crate::geometry::{Frame, RotVec, Transform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkConfig {
    pub damping: f64,
    pub max_iterations: usize,
    /// Converged once both residuals are below these.
    pub position_tolerance: f64,
    pub rotation_tolerance: f64,
    /// Position residual above which the solve is reported as failed.
    pub failure_tolerance: f64,
}

impl Default for IkConfig {
    fn default() -> Self {
        IkConfig {
            damping: 0.05,
            max_iterations: 50,
            position_tolerance: 1e-4,
            rotation_tolerance: 1e-3,
            failure_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkOutcome {
    /// Full joint vector; only the first 9 entries are changed.
    pub q: Vec<f64>,
    pub position_residual: f64,
    pub rotation_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl IkOutcome {
    pub fn failed(&self, cfg: &IkConfig) -> bool {
        self.position_residual > cfg.failure_tolerance
    }
}

fn pose_error(target: &Frame, current: &Frame) -> [f64; 6] {
    let dp = target.origin - current.origin;
    let dr = RotVec::from_matrix(&(target.rotation * current.rotation.transpose())).0;
    [dp.x, dp.y, dp.z, dr.x, dr.y, dr.z]
}

/// Solves `A x = b` for a symmetric positive definite 6×6 `A` (Cholesky).
fn solve_spd6(a: &[[f64; 6]; 6], b: &[f64; 6]) -> [f64; 6] {
    let mut l = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][i] = crate::math::sqrt(s.max(1e-300));
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0; 6];
    for i in 0..6 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; 6];
    for i in (0..6).rev() {
        let mut s = y[i];
        for k in i + 1..6 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// One damped least-squares step: `Δq = Jᵀ (J Jᵀ + λ² I)⁻¹ e`.
pub fn dls_step(jac: &WristJacobian, err: &[f64; 6], damping: f64) -> [f64; IK_DOF] {
    let mut a = [[0.0; 6]; 6];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..IK_DOF).map(|k| jac[r][k] * jac[c][k]).sum();
        }
        row[r] += damping * damping;
    }
    let y = solve_spd6(&a, err);
    core::array::from_fn(|k| (0..6).map(|r| jac[r][k] * y[r]).sum())
}

/// Iterative DLS solve toward `target`. Joints whose `active` flag is false
/// keep their value (the fixed-base mode freezes the two base joints).
/// Joint limits are enforced after every step.
pub fn solve(
    spec: &RobotSpec,
    anchor: &Transform,
    q0: &[f64],
    target: &Frame,
    active: &[bool; IK_DOF],
    cfg: &IkConfig,
) -> Result<IkOutcome> {
    if q0.len() != spec.joint_count() {
        return Err(Error::DimensionMismatch {
            what: "joint vector",
            expected: spec.joint_count(),
            got: q0.len(),
        });
    }
    let anchor = anchor.to_frame();
    let limits = spec.joint_limits();
    let mut q = q0.to_vec();
    let mut iterations = 0;
    loop {
        let (wrist, mut jac) = jacobian_at(spec, &anchor, &q);
        let e = pose_error(target, &wrist);
        let pos = Vec3::new(e[0], e[1], e[2]).norm();
        let rot = Vec3::new(e[3], e[4], e[5]).norm();
        let converged = pos < cfg.position_tolerance && rot < cfg.rotation_tolerance;
        if converged || iterations == cfg.max_iterations {
            return Ok(IkOutcome {
                q,
                position_residual: pos,
                rotation_residual: rot,
                iterations,
                converged,
            });
        }
        for (c, on) in active.iter().enumerate() {
            if !on {
                for row in jac.iter_mut() {
                    row[c] = 0.0;
                }
            }
        }
        let dq = dls_step(&jac, &e, cfg.damping);
        for k in 0..IK_DOF {
            if active[k] {
                q[k] = limits[k].clamp(q[k] + dq[k]);
            }
        }
        iterations += 1;
    }
}

/// Returns the updated joint vector, or `ik_not_converged` when the position
/// residual is still above 1 mm after the iteration budget.
pub fn ik_solve(spec: &RobotSpec, anchor: &Transform, q0: &[f64], target: &Transform) -> Result<Vec<f64>> {
    let cfg = IkConfig::default();
    let out = solve(spec, anchor, q0, &target.to_frame(), &[true; IK_DOF], &cfg)?;
    if out.failed(&cfg) {
        return Err(Error::IkNotConverged {
            position: out.position_residual,
            rotation: out.rotation_residual,
            iterations: out.iterations,
        });
    }
    Ok(out.q)
}
