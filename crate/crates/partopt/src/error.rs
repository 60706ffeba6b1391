use std::path::PathBuf;

/// Everything the harness can fail with. Each variant maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid experiment: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] partopt_core::Error),
    #[error("{}:{line}: {message}", path.display())]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} of {1} repeats diverged")]
    Diverged(usize, usize),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 validation, 2 divergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. }
            | HarnessError::Validation(_)
            | HarnessError::Core(_)
            | HarnessError::Data { .. } => 1,
            HarnessError::Diverged(..) => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
