use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid workload spec: {0}")]
    Spec(String),
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] dsssp_core::Error),
    #[error("algorithm {algo} cannot run on this input: {reason}")]
    IncompatibleAlgo { algo: &'static str, reason: String },
    #[error("verification failed: {violations} contract violations")]
    VerificationFailed { violations: u64 },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Process exit code: 2 for contract violations, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::VerificationFailed { .. } => 2,
            _ => 1,
        }
    }
}
