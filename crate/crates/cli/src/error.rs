use std::path::{Path, PathBuf};

use teig::TeigError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("profile not found: {}", .0.display())]
    ProfileNotFound(PathBuf),

    #[error("acceptance failure: {}", .0.join("; "))]
    AcceptanceFailure(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Numerical(#[from] TeigError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::AcceptanceFailure(_) => 2,
            _ => 1,
        }
    }
}
