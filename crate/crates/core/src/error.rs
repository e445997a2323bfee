use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular phase: |sin(theta_P/2)| = {value:.3e} is below 1e-6")]
    SingularPhase { value: f64 },
    #[error("no phase setting reproduces the target (best residual {best_residual:.3e} after {starts} starts)")]
    NoSolutionFound { starts: usize, best_residual: f64 },
    #[error("Hilbert space dimension {dim} exceeds the cap of {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("unknown cavity label `{0}`")]
    UnknownLabel(String),
    #[error("unknown quantum-dot level `{0}`")]
    UnknownLevel(String),
    #[error("occupation {occupation} of `{label}` exceeds the truncation {n_max}")]
    OutOfTruncation { label: String, occupation: usize, n_max: usize },
    #[error("operator is not Hermitian (max |H - H^dag| = {deviation:.3e})")]
    NonHermitian { deviation: f64 },
    #[error("state has weight {weight:.3e} outside the logical subspace")]
    NotInLogicalSubspace { weight: f64 },
    #[error("integrator failed at t = {t:.6e} (step {step:.3e})")]
    IntegratorFailure { t: f64, step: f64 },
    #[error("validity condition violated: {0}")]
    ValidityViolated(String),
    #[error("delay {delay:.6e} is not an integer multiple of the step {dt:.6e}")]
    IncommensurateStep { delay: f64, dt: f64 },
    #[error("energy bookkeeping drifted by {drift:.3e} at t = {t:.6e}")]
    UnstableStep { drift: f64, t: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
