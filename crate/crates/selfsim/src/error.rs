use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transform applied to a bounded non-decaying field")]
    NonDecayingInput,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("tail exponent {0} is not integrable (need p > 1)")]
    NonIntegrableTail(f64),
    #[error("quadrature self-consistency failed: change {change:.3e} > {tol:.1e}")]
    QuadratureFailure { change: f64, tol: f64 },
    #[error("consistency check `{what}` failed: {measured:.3e} > {tol:.1e}")]
    ConsistencyFailure {
        what: String,
        measured: f64,
        tol: f64,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("linear system is singular: min pivot {pivot:.3e} below {threshold:.3e}")]
    SingularSystem { pivot: f64, threshold: f64 },
    #[error("no convergence after {steps} steps (last increment {last_delta:.3e})")]
    NoConvergence { steps: usize, last_delta: f64 },
    #[error("contraction failure at step {step}: ratio >= 1 for 3 consecutive steps")]
    ContractionFailure { step: usize },
    #[error("non-finite values in {0}")]
    NonFiniteData(String),
    #[error("bound violated: {0}")]
    BoundViolation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
