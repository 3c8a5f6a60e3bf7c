use thiserror::Error;

use crate::construction::DirectionSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no interior starting point for hit-and-run")]
    NoInteriorPoint,

    #[error("burn-in {burn_in} below the minimum {min} (10 * dimension)")]
    BadBurnIn { burn_in: usize, min: usize },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("singular covariance: eigenvalue ratio {ratio:e} below 1e-12")]
    SingularCovariance { ratio: f64 },

    #[error("input vectors are linearly dependent")]
    DependentInput,

    #[error("p = {p} exceeds the Monte Carlo budget limit p_max = {p_max:.4}")]
    PTooLargeForBudget { p: f64, p_max: f64 },

    #[error("moment profile is empty")]
    EmptyProfile,

    #[error("q = {q} outside the admissible range ({range})")]
    QOutOfRange { q: f64, range: String },

    #[error("c0 * n = {product} < 1: dimension too small for the dyadic grid")]
    DimensionTooSmall { product: f64 },

    #[error("budget exhausted after {} of {} directions", .partial.thetas.len(), .partial.target_m)]
    BudgetExhausted { partial: Box<DirectionSet> },

    #[error("set is not symmetric: {0}")]
    AsymmetricInput(String),

    #[error("mass estimate unresolvable at this budget: {0}")]
    UnresolvableMass(String),

    #[error("inconsistent negative moments: a_p = {a_p} < b_p = {b_p}")]
    InvalidMoments { a_p: f64, b_p: f64 },

    #[error("no closed-form support function for {0}")]
    NoSupportFunction(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
