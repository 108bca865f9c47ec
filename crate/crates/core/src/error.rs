use thiserror::Error;

/// Errors raised by the solvers.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type so that
/// the error is independent of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("x = {x} lies outside [0, pi]")]
    Domain { x: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("cannot parse potential spec: {0}")]
    Parse(String),

    #[error("integration failed at x = {at} for lambda = {lambda_re}{lambda_im:+}i: {reason}")]
    IntegrationFailure {
        at: f64,
        lambda_re: f64,
        lambda_im: f64,
        reason: String,
    },

    #[error("singular argument rho = 0")]
    SingularArgument,

    #[error("smallness condition fails: upsilon = {upsilon:e} is not below {threshold:e}")]
    ConditionNotSatisfied { upsilon: f64, threshold: f64 },

    #[error("no convergence after {iterations} iterations (last change {change:e})")]
    Convergence { iterations: usize, change: f64 },

    #[error("contour passes too close to a zero near lambda = {re}{im:+}i")]
    ContourTooClose { re: f64, im: f64 },

    #[error("localization failed: {0}")]
    Localization(String),

    #[error("multiplicity undetermined near lambda = {re}{im:+}i")]
    MultiplicityUndetermined { re: f64, im: f64 },

    #[error("trace for index {n} is numerically zero")]
    DegenerateTrace { n: usize },

    #[error("degenerate pairing for index {n}: near-Jordan structure")]
    DegeneratePairing { n: usize },

    #[error("root chain at index {n} is rank deficient for multiplicity {multiplicity}")]
    InconsistentMultiplicity { n: usize, multiplicity: usize },

    #[error("contour |lambda| = (n + 1/2)^2 does not separate the spectrum for n = {n}: {detail}")]
    ContourConflict { n: usize, detail: String },

    #[error("lambda = {re}{im:+}i is too close to the spectrum (margin {margin})")]
    IllConditionedResolvent { re: f64, im: f64, margin: f64 },
}

/// Coarse failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numerical,
    Separation,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) | Error::InvalidPotential(_) | Error::Domain { .. } | Error::Argument(_) => {
                ErrorClass::Input
            }
            Error::ContourTooClose { .. }
            | Error::ContourConflict { .. }
            | Error::IllConditionedResolvent { .. } => ErrorClass::Separation,
            _ => ErrorClass::Numerical,
        }
    }

    /// Stable identifier used in machine-readable error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Argument(_) => "argument",
            Error::InvalidPotential(_) => "invalid_potential",
            Error::Parse(_) => "parse",
            Error::IntegrationFailure { .. } => "integration_failure",
            Error::SingularArgument => "singular_argument",
            Error::ConditionNotSatisfied { .. } => "condition_not_satisfied",
            Error::Convergence { .. } => "convergence",
            Error::ContourTooClose { .. } => "contour_too_close",
            Error::Localization(_) => "localization",
            Error::MultiplicityUndetermined { .. } => "multiplicity_undetermined",
            Error::DegenerateTrace { .. } => "degenerate_trace",
            Error::DegeneratePairing { .. } => "degenerate_pairing",
            Error::InconsistentMultiplicity { .. } => "inconsistent_multiplicity",
            Error::ContourConflict { .. } => "contour_conflict",
            Error::IllConditionedResolvent { .. } => "ill_conditioned_resolvent",
        }
    }
}

pub type Result<V, E = Error> = std::result::Result<V, E>;
