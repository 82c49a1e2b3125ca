//! Grouped linear regression with a pairwise fused-lasso penalty.
//!
//! Each class (group) gets its own linear model. Corresponding slopes of
//! different classes are pulled together by a weighted ℓ₁ penalty on their
//! differences, so a single tuning parameter moves the fit from fully
//! separate per-class least squares (`λ = 0`) to a pooled model with one
//! slope per predictor (`λ ≥ λ_max`).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the HTTP service live in the `mcfuse` companion crate.

#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod evaluation;
pub mod flow;
pub mod fusion;
pub mod linalg;
pub mod mq4;
pub mod selection;
pub mod solver;
pub mod summary;

pub use data::{
    apply_missingness_mask, standardize, ClassDesign, Dataset, GroupedData, MaskPolicy, RawColumn,
    RawTable, StandardizationStats,
};
pub use error::{Error, Result};
pub use evaluation::{per_class_report, ConfusionMatrix, EvaluationReport, MethodComparison, Star, StarThresholds};

pub use fusion::{build_d, build_pairs, CoefficientLayout, CouplingMatrix, FusionPair};
pub use mq4::{mq4, PanelRecord};
pub use selection::{aggregate, aic_select, cv_on_grid, cv_select, fit_fold, make_folds, AicCurve, CrossValidation, CvReport, Folds};

pub use solver::{
    fit_classic_pooled, fit_new_pooled, fit_separate, lambda_max, qp_oracle, solve_at, solve_path,
    Coefficients, FitConfig, PathPoint, PathResult,
};
