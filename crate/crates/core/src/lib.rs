//! Keypoint-parameterized mobile manipulation.
//!
//! A kinematic desk-scale world in which a mobile robot (yaw + drive base,
//! 7-DOF arm, gripper or multi-finger hand) reaches an object grasp point and
//! carries it to a goal point. The crate contains everything that is pure
//! computation: rigid geometry, robot kinematics and IK, one-joint object
//! models, the episode state machine, the observation vector, the shaped
//! reward, a from-scratch PPO trainer and trajectory records.
//!
//! The crate is `no_std` + `alloc`. IO, file formats and the command line
//! live in the `manibench` companion crate. Enable the `std` feature to get
//! runtime-dispatched SIMD kernels for the dense layers.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;

mod math;

pub mod control;
pub mod dataset;
pub mod env;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod observation;
pub mod reward;
pub mod rl;
pub mod rng;
pub mod robot;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{Frame, Mat3, RotVec, Transform, Vec3};
