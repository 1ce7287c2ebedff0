use std::io;
use std::path::{Path, PathBuf};

/// Failures of the file-level pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] valence_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn read(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
        move |source| Error::Read { path: path.to_path_buf(), source }
    }

    pub(crate) fn write(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
        move |source| Error::Write { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(path: &Path, message: impl Into<String>) -> Error {
        Error::Parse { path: path.to_path_buf(), message: message.into() }
    }

    /// Process exit code: 2 for bad input or usage, 1 for failures while
    /// running on valid input.
    pub fn exit_code(&self) -> i32 {
        use valence_core::Error as Core;
        match self {
            Error::Read { .. } | Error::Parse { .. } | Error::Config(_) => 2,
            Error::Write { .. } => 1,
            Error::Core(e) => match e {
                Core::NonFiniteLoss { .. } | Core::StaleContext(_) | Core::Undefined(_) => 1,
                _ => 2,
            },
        }
    }
}
