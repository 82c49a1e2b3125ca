use alloc::boxed::Box;
use alloc::string::String;

use crate::solver::Coefficients;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Last ADMM iterate when the iteration budget runs out.
#[derive(Debug, Clone)]
pub struct NotConverged {
    pub lambda: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub last: Coefficients,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("class `{0}` has no observations")]
    EmptyClass(String),
    #[error("predictor `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("non-finite value in column `{column}` (row {row})")]
    NonFinite { column: String, row: usize },
    #[error("response {value} at row {row} is outside [{lo}, {hi}]")]
    ResponseOutOfRange { row: usize, value: f64, lo: f64, hi: f64 },
    #[error("column `{column}` has {got} rows, expected {expected}")]
    ColumnLength { column: String, got: usize, expected: usize },
    #[error("panel trait `{trait_name}` has {got} scores, expected 10")]
    PanelSize { trait_name: &'static str, got: usize },
    #[error("panel score {value} in trait `{trait_name}` is outside [0, 100]")]
    PanelScore { trait_name: &'static str, value: f64 },
    #[error("nothing to fuse: no predictor is shared by two classes")]
    NothingToFuse,
    #[error("coefficient layout has no column for class {class}, predictor {predictor}")]
    MissingCoefficient { class: usize, predictor: usize },
    #[error("observation for class `{class}` lacks predictor `{predictor}`")]
    MissingPredictor { class: String, predictor: String },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error(
        "solver did not converge at lambda={} after {} iterations (primal {:.3e}, dual {:.3e})",
        .0.lambda, .0.iterations, .0.primal_residual, .0.dual_residual
    )]
    NotConverged(Box<NotConverged>),
    #[error("oracle supports at most {cap} coefficients, got {dim}")]
    OracleTooLarge { dim: usize, cap: usize },
    #[error("oracle needs a positive definite Gram matrix")]
    OracleSingular,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("star thresholds must satisfy 0 < t3 < t4 < t5 < 100")]
    InvalidThresholds,
    #[error("length mismatch: {0}")]
    LengthMismatch(&'static str),
}
