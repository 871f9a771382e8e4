use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode budget exceeded: cutoff needs about {requested} modes, budget is {budget}")]
    ModeBudget { requested: usize, budget: usize },

    #[error("lambda {lambda} is above the mode-set cutoff {lambda_max}")]
    AboveCutoff { lambda: f64, lambda_max: f64 },

    #[error("spectral truncation tail {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationTail { tail: f64, tolerance: f64 },

    #[error("quadrature did not converge: error estimate {achieved:.3e}, tolerance {tolerance:.3e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("negative density mass {negative_mass:.3e} exceeds the clamp allowance (under-smoothing)")]
    NegativeDensity { negative_mass: f64 },

    #[error("density must be positive on the grid, minimum is {min:.3e}")]
    NonPositiveDensity { min: f64 },

    #[error("sinkhorn did not converge after {iterations} iterations, marginal residual {residual:.3e}")]
    SinkhornNotConverged { iterations: usize, residual: f64 },

    #[error("restricted generator is singular")]
    SingularGenerator,

    #[error("Z·φ leaves the truncated basis; enlarge lambda_max to at least {required_lambda_max}")]
    TruncationEscape { required_lambda_max: f64 },

    #[error("stationary rejection sampler acceptance rate {rate:.3e} is below 1e-4")]
    AcceptanceRate { rate: f64 },

    #[error("non-finite diffusion state at step {step} of replica {replica}")]
    NonFiniteState { replica: u64, step: u64 },

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("run needs about {required:.3e} mode-steps, budget is {budget:.3e}")]
    WorkBudget { required: f64, budget: f64 },

    #[error("log-log fit residual {residual:.3e} exceeds {tolerance:.3e}")]
    FitResidual { residual: f64, tolerance: f64 },

    #[error("divergence check failed: sup |div(e^V Z)| = {residual:.3e}, allowed {allowed:.3e}")]
    Divergence { residual: f64, allowed: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
