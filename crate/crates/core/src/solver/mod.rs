//! Fused-lasso fits along a grid of λ values.
//!
//! The intercepts are unpenalized, so each class is centered and the solver
//! works on slopes only: minimize `½ Σ_m ‖ỹ_m − X̃_m β_m‖² + λ‖Dβ‖₁`, then set
//! `β₀^(m) = ȳ_m − x̄_mᵀβ_m`.
//!
//! [`solve_at`] runs ADMM on the split `z = Dβ`. Every few iterations the
//! current fusion pattern is polished into an exact candidate (one free
//! value per fused group, fixed signs across groups) and checked against the
//! optimality conditions with a max-flow test; a certified candidate ends the
//! iteration early.

mod admm;
mod endpoints;
mod lambda_max;
mod oracle;
mod path;
mod polish;
mod predict;
mod problem;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use admm::solve_at;
pub use endpoints::{fit_classic_pooled, fit_new_pooled, fit_separate, EndpointFit};
pub use lambda_max::lambda_max;
pub use oracle::{qp_oracle, OracleFit, ORACLE_MAX_DIM};
pub use path::{fusion_partition, make_grid, solve_path, PathSolver};
pub use predict::{fitted_values, predict, predict_row, to_raw_scale, RawObservation};
pub use problem::objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub grid_size: usize,
    pub lambda_min_ratio: f64,
    /// Relative ADMM penalty. The effective ρ is this value times
    /// `tr(X̃ᵀX̃) / tr(DᵀD)`.
    pub admm_rho: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub fuse_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            grid_size: 100,
            lambda_min_ratio: 1e-4,
            admm_rho: 1.0,
            tol_abs: 1e-8,
            tol_rel: 1e-6,
            max_iter: 50_000,
            fuse_tol: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 {
            return Err(Error::InvalidConfig("grid_size must be positive"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::InvalidConfig("lambda_min_ratio must lie in (0, 1)"));
        }
        if !(self.admm_rho > 0.0 && self.tol_abs > 0.0 && self.tol_rel > 0.0 && self.fuse_tol > 0.0) {
            return Err(Error::InvalidConfig("rho, tolerances and fuse_tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive"));
        }
        Ok(())
    }
}

/// Standardized-scale coefficients: slopes in [`crate::CoefficientLayout`]
/// order and one intercept per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// The returned point passed the exact optimality check.
    pub certified: bool,
    /// Classes whose least-squares block needed a minimum-norm solve.
    pub rank_deficient: Vec<String>,
}

/// Solution at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub coefficients: Coefficients,
    pub rss: f64,
    pub penalty: f64,
    pub objective: f64,
    pub df: usize,
    /// Per predictor: groups of class indices sharing one coefficient value.
    pub partition: Vec<Vec<Vec<usize>>>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub layout: crate::fusion::CoefficientLayout,
    pub lambda_max: f64,
    /// Ascending; starts with exactly 0.
    pub grid: Vec<f64>,
    /// Aligned with `grid`.
    pub points: Vec<PathPoint>,
}

impl PathResult {
    /// Grid index closest to `lambda`.
    pub fn nearest(&self, lambda: f64) -> usize {
        let mut best = 0;
        for (i, g) in self.grid.iter().enumerate() {
            if (g - lambda).abs() < (self.grid[best] - lambda).abs() {
                best = i;
            }
        }
        best
    }
}

/// Disjoint-set forest over `n` items.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Dense labels `0..k` in order of first appearance.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut map = alloc::vec![usize::MAX; n];
        let mut labels = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = k;
                k += 1;
            }
            labels.push(map[r]);
        }
        (labels, k)
    }
}
