use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Domain errors carry the offending point or parameter so the CLI can
/// report them with context.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time scale is empty inside the window [{lo}, {hi}]")]
    EmptyScale { lo: f64, hi: f64 },

    #[error("point {t} is not in the time scale")]
    NotInScale { t: f64 },

    #[error("derivative at t = {t} is degenerate: t is the maximum of the scale")]
    DegenerateAtMax { t: f64 },

    #[error("derivative at t = {t} is degenerate: t is the minimum of the scale")]
    DegenerateAtMin { t: f64 },

    #[error(
        "{scheme} exponential is not regressive at t = {t} (mu = {mu}, coefficient = {value})"
    )]
    NotRegressive {
        scheme: String,
        t: f64,
        mu: f64,
        value: String,
    },

    #[error("circle-plus denominator vanishes (mu = {mu})")]
    SingularOplus { mu: f64 },

    #[error("Pade order ({j}, {k}) outside the supported range (1 <= j + k <= {cap})")]
    OrderTooLarge { j: u32, k: u32, cap: u32 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance (error estimate {estimate:e})")]
    QuadratureFailure { a: f64, b: f64, estimate: f64 },

    #[error("implicit solve diverged at t = {t} after {} iterations (last residual {:e})", .residuals.len(), .residuals.last().copied().unwrap_or(f64::NAN))]
    SolverDiverged { t: f64, residuals: Vec<f64> },

    #[error("scheme {scheme} cannot be used here: {reason}")]
    InvalidScheme { scheme: String, reason: String },

    #[error("series did not converge within {terms} terms")]
    NoConvergence { terms: usize },

    #[error("q-product has a pole at factor k = {k}")]
    PoleInProduct { k: usize },

    #[error("I - mu*A/2 is numerically singular (condition estimate {condition:e})")]
    SingularCayley { condition: f64 },

    #[error("coefficient is not in the Lie algebra at t = {t} (defect {defect:e} > {tol:e})")]
    AlgebraViolation { t: f64, defect: f64, tol: f64 },

    #[error("initial element is not in the group (defect {defect:e} > {tol:e})")]
    GroupViolation { defect: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
