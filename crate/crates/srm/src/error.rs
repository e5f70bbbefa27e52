use std::path::{Path, PathBuf};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad flags, config or input files, including failed overlap audits.
    pub const VALIDATION: i32 = 2;
    pub const ITERATION_LIMIT: i32 = 3;
    /// Every percolation row of the run was non-percolating.
    pub const NOT_PERCOLATING: i32 = 4;
    pub const IO: i32 = 5;
    /// Any other failure of the numerical kernel.
    pub const RUNTIME: i32 = 1;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("overlap audit failed: {0}")]
    Audit(String),
    #[error("no percolating configuration in the run")]
    NotPercolating,
    #[error(transparent)]
    Core(#[from] srm_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use srm_core::Error as E;
        match self {
            CliError::Validation(_) | CliError::Format { .. } | CliError::Audit(_) => exit::VALIDATION,
            CliError::Io { .. } => exit::IO,
            CliError::NotPercolating => exit::NOT_PERCOLATING,
            CliError::Core(E::IterationLimitExceeded { .. }) => exit::ITERATION_LIMIT,
            CliError::Core(E::NotPercolating { .. }) => exit::NOT_PERCOLATING,
            CliError::Core(
                E::InvalidBox | E::InvalidParameter(_) | E::BoxTooSmall { .. } | E::NonCubicBox | E::DeltaMaxTooLarge { .. } | E::PlacementFailure { .. },
            ) => {
                exit::VALIDATION
            }
            CliError::Core(_) => exit::RUNTIME,
        }
    }
}
