//! Forward kinematics against an independent homogeneous-matrix chain,
//! the wrist Jacobian against central differences, and IK convergence on
//! small wrist displacements.

#[path = "common/kinematics.rs"]
mod oracle;

use oracle::{ik_success, robots, worst_fk_error, worst_jacobian_error};

#[test]
fn forward_kinematics_matches_matrix_chain() {
    for spec in robots() {
        let worst = worst_fk_error(&spec, 1000);
        assert!(worst < 1e-9, "{}: max FK error {worst:e}", spec.name);
    }
}

#[test]
fn jacobian_matches_central_differences() {
    for spec in robots() {
        let worst = worst_jacobian_error(&spec, 1000);
        assert!(worst < 1e-4, "{}: max relative Jacobian error {worst:e}", spec.name);
    }
}

#[test]
fn ik_converges_on_small_displacements() {
    for spec in robots() {
        let rate = ik_success(&spec, 1000);
        assert!(rate >= 0.99, "{}: {rate}", spec.name);
    }
}
