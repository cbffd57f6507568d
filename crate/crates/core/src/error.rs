use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },
    #[error("mode {0} listed more than once")]
    DuplicateMode(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed generator: {0}")]
    MalformedGenerator(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("factor on block {block} mixes particle numbers")]
    MixedParticleNumber { block: usize },
    #[error("zero-norm state")]
    ZeroNorm,
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("interaction file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty sector: {0}")]
    EmptySector(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("zero exact energy, relative error undefined")]
    ZeroExactEnergy,
    #[error("optimizer diverged: energy rose by {increase:e} over the warm start")]
    OptimizerDiverged { increase: f64 },
    #[error("forged state norm deviates from one by {0:e}; term orthogonality is broken")]
    BrokenOrthogonality(f64),
    #[error("candidate rejected: {0}")]
    RejectedCandidate(String),
    #[error("invalid forging request: {0}")]
    InvalidForging(String),
}
