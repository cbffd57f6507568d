use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] forge_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("checkpoint format version {found}, expected {expected}")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("corrupted checkpoint: {0}")]
    CheckpointCorrupted(String),
    #[error("checkpoint does not match this run: {0}")]
    CheckpointMismatch(String),
    #[error("malformed trace: {0}")]
    Trace(String),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything that fails later.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
