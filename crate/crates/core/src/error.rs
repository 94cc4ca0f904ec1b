use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical pipeline.
///
/// Every variant maps to a stable, machine-readable reason code via
/// [`Error::code`]; reports carry that code rather than the message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {value} at index {index} in {what}")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coefficient a({t}, {xi}) = {value} is below the declared lower bound {delta}")]
    CoefficientBelowBound {
        t: f64,
        xi: f64,
        value: f64,
        delta: f64,
    },

    #[error("singular tridiagonal solve (pivot {pivot:e} at row {row})")]
    SingularSolve { row: usize, pivot: f64 },

    #[error("time index order violated: end {end} < start {start}")]
    BackwardEvolution { start: usize, end: usize },

    #[error("resolvent solve did not converge in {iterations} iterations (best residual {best_residual:e})")]
    ResolventNotConverged {
        iterations: usize,
        best_residual: f64,
    },

    #[error("fixed-point iteration stopped after {iterations} iterations (update norm {update_norm:e})")]
    FixedPointNotConverged { iterations: usize, update_norm: f64 },

    #[error("nonlinearity produced a non-finite value at t = {t}")]
    NonlinearityNotFinite { t: f64 },

    #[error("nonlinearity bound violated at t = {t}: |f| = {norm} > K = {bound}")]
    NonlinearityBound { t: f64, norm: f64, bound: f64 },

    #[error("iterate left the a-priori ball: sup norm {norm} > {radius}")]
    BallEscape { norm: f64, radius: f64 },

    #[error("Gramian assembly defect: smallest eigenvalue {0:e} is negative beyond tolerance")]
    GramianIndefinite(f64),

    #[error("dense linear solve failed: {0}")]
    LinearSolve(String),

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl Error {
    /// Stable reason code used in structured reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::CoefficientBelowBound { .. } => "coefficient_below_bound",
            Error::SingularSolve { .. } => "singular_solve",
            Error::BackwardEvolution { .. } => "backward_evolution",
            Error::ResolventNotConverged { .. } => "resolvent_not_converged",
            Error::FixedPointNotConverged { .. } => "fixed_point_not_converged",
            Error::NonlinearityNotFinite { .. } => "nonlinearity_not_finite",
            Error::NonlinearityBound { .. } => "nonlinearity_bound",
            Error::BallEscape { .. } => "ball_escape",
            Error::GramianIndefinite(_) => "gramian_indefinite",
            Error::LinearSolve(_) => "linear_solve",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
