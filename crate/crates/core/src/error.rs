use alloc::string::String;

/// Errors produced by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("ik_not_converged: residual {position:.3e} m / {rotation:.3e} rad after {iterations} iterations")]
    IkNotConverged {
        position: f64,
        rotation: f64,
        iterations: usize,
    },

    #[error("incompatible task: {0}")]
    IncompatibleTask(String),

    #[error("episode finished")]
    EpisodeFinished,

    #[error("no episodes")]
    NoEpisodes,

    #[error("diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
