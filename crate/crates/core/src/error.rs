use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: ‖A − A†‖_F = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary: ‖U†U − 1‖_F = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("eigenphase {phase} lies on the branch cut at −π; the logarithm is not unique")]
    BranchCut { phase: f64 },

    #[error("eigendecomposition did not converge")]
    NoConvergence,

    #[error("vector {index} is linearly dependent on its predecessors (residual norm {residual:e})")]
    RankDeficient { index: usize, residual: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state is not normalized: ‖ψ‖² = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid measurement strength: {0}")]
    InvalidStrength(String),

    #[error("outcome {index} has probability {probability:e}, too small to condition on")]
    ImpossibleOutcome { index: usize, probability: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration step {step_dt} exceeds the noise hold interval {resample_dt}")]
    UnderResolvedNoise { step_dt: f64, resample_dt: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
