use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value produced in {0}")]
    NumericDomain(&'static str),
    #[error("singular point: {0}")]
    Singularity(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate cubic denominator: alpha*phi*m2 equals d + delta + gamma")]
    DegenerateDenominator,
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("no coexistence equilibrium at alpha = {alpha}")]
    NoCoexistence { alpha: f64 },
    #[error("integration produced a non-finite value at t = {t}")]
    StepUnstable { t: f64 },
    #[error("component {component} fell to {value:e} at t = {t}")]
    PositivityViolated { t: f64, component: usize, value: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,
    #[error("expected a {expected} equilibrium")]
    WrongKind { expected: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
