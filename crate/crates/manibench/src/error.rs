use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] manibench_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed checkpoint at byte {offset}: {detail}")]
    MalformedCheckpoint { offset: usize, detail: String },

    #[error("malformed trajectory at byte {offset}: {detail}")]
    MalformedTrajectory { offset: usize, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error("manifest {}: {detail}", path.display())]
    Manifest { path: PathBuf, detail: String },

    #[error("{0}")]
    Failed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
