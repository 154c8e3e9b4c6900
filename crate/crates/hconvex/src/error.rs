use std::path::PathBuf;

use thiserror::Error;

/// Exit status for a failed fact or convexity check.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for malformed arguments or input files.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when a search window or certificate is insufficient.
pub const EXIT_WINDOW: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hconvex_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(String),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(hconvex_core::Error::WindowTooSmall { .. } | hconvex_core::Error::NoCertificate) => EXIT_WINDOW,
            _ => EXIT_USAGE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn json(context: impl Into<String>) -> impl FnOnce(serde_json::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Json { context, source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
