use thiserror::Error;

use crate::lpkernel::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid uncertainty set: {0}")]
    InvalidSet(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("model is infeasible")]
    InfeasibleModel,
    #[error("row {0} of the recourse matrix has no positive entry")]
    UncoverableComponent(usize),
    #[error("problem too large for exhaustive treatment: {0}")]
    TooLarge(String),
    #[error("no first-stage decision admits feasible recourse in every scenario")]
    RecourseInfeasible,
    #[error("operation requires a nonnegative recourse matrix")]
    NotNonnegative,
    #[error("operation requires {0}")]
    Unsupported(String),
    #[error("index {index}: unit cost ratio {ratio} does not exceed η·γ = {bound}")]
    ConditionOneViolated { index: usize, ratio: f64, bound: f64 },
    #[error("dual rounding failed in {trials} trials (fractional dual value {dual_value})")]
    RoundingExhausted { trials: usize, dual_value: f64 },
    #[error("no sampled scenario accepted within {0} retries")]
    SamplingExhausted(usize),
    #[error("uncertainty set is not permutation invariant")]
    NotPermutationInvariant,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Lp(LpError::MalformedProblem(_)) => "malformed_problem",
            Error::Lp(LpError::NumericalFailure(_)) => "numerical_failure",
            Error::Lp(LpError::TimeLimit) => "time_limit",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::InvalidSet(_) => "invalid_set",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InfeasibleModel => "infeasible_model",
            Error::UncoverableComponent(_) => "uncoverable_component",
            Error::TooLarge(_) => "too_large",
            Error::RecourseInfeasible => "recourse_infeasible",
            Error::NotNonnegative => "not_nonnegative",
            Error::Unsupported(_) => "unsupported",
            Error::ConditionOneViolated { .. } => "condition_one_violated",
            Error::RoundingExhausted { .. } => "rounding_exhausted",
            Error::SamplingExhausted(_) => "sampling_exhausted",
            Error::NotPermutationInvariant => "not_permutation_invariant",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
