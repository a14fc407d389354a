use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KppError {
    /// A structural hypothesis on the model (or an operation precondition) does not hold.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    /// An iterative method exhausted its budget.
    #[error("no convergence in {method} after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("sampling inconclusive: {0}")]
    SamplingInconclusive(String),

    #[error("speed {speed} is below the minimal wave speed {c_star}")]
    SpeedBelowCritical { speed: f64, c_star: f64 },

    #[error("bracketing violation: {0}")]
    BracketingViolation(String),

    #[error("positivity breach: u = {value:e} at component {component}, node {node}")]
    PositivityBreach { value: f64, component: usize, node: usize },

    #[error("time step {dt} exceeds the explicit reaction budget (max {max_dt})")]
    StabilityBudgetExceeded { dt: f64, max_dt: f64 },

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// A tracked front came too close to the end of the computational domain.
    #[error("front reached x = {x} at t = {t}, too close to the domain boundary")]
    FrontReachedBoundary { t: f64, x: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, KppError>;
