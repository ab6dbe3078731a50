//! File formats, parallel execution and the command line for
//! [`manibench_core`].

mod bytes;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod report;
pub mod trajfile;

pub use error::{Error, Result};
