//! Parametric mobile manipulator: base (yaw + drive), 7-DOF arm and a
//! gripper or hand.
//!
//! Joint vectors are laid out as `[yaw, drive, arm × 7, effector × D]`.

pub mod ik;
pub mod kinematics;
pub mod spec;
pub mod state;

pub use ik::{ik_solve, IkConfig, IkOutcome};
pub use kinematics::{forward_kinematics, wrist_frame, wrist_jacobian, Kinematics, WristJacobian};
pub use spec::{
    gripper_bot, hand_bot, Anchor, BaseSpec, BodyPoint, Effector, FingerSpec, GripperPoint, GripperSpec, HandSpec,
    JointKind, JointLimits, JointSpec, RobotSpec, ARM_DOF, BASE_DOF, IK_DOF, SHIPPED_ROBOTS,
};
pub use state::{apply_action, Action, ActionLimits, RobotState, StepOptions};
