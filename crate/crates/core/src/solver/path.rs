use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::Result;
use crate::fusion::{CoefficientLayout, CouplingMatrix};

use super::admm::{AdmmState, Engine};
use super::lambda_max::lambda_max_of;
use super::polish::{grouped_solve, Grouping};
use super::{FitConfig, PathPoint, PathResult, UnionFind};

/// Per predictor, classes whose slopes lie within `tol` of each other
/// (transitively). Groups are listed by their smallest class index.
pub fn fusion_partition(ds: &Dataset, layout: &CoefficientLayout, slopes: &[f64], tol: f64) -> Vec<Vec<Vec<usize>>> {
    (0..ds.predictors.len())
        .map(|j| {
            let carriers = ds.carriers(j);
            let values: Vec<f64> = carriers.iter().map(|&m| slopes[layout.col(m, j).unwrap_or_default()]).collect();
            let mut uf = UnionFind::new(carriers.len());
            for a in 0..carriers.len() {
                for b in a + 1..carriers.len() {
                    if (values[a] - values[b]).abs() <= tol {
                        uf.union(a, b);
                    }
                }
            }
            let (labels, k) = uf.labels();
            let mut groups = vec![Vec::new(); k];
            for (i, &l) in labels.iter().enumerate() {
                groups[l].push(carriers[i]);
            }
            groups
        })
        .collect()
}

/// Distinct slope values plus one intercept per class.
pub fn degrees_of_freedom(partition: &[Vec<Vec<usize>>], n_classes: usize) -> usize {
    partition.iter().map(Vec::len).sum::<usize>() + n_classes
}

/// `{0}` followed by `grid_size` log-spaced values ending at `lambda_max`.
pub fn make_grid(lambda_max: f64, cfg: &FitConfig) -> Vec<f64> {
    let mut grid = vec![0.0];
    if lambda_max <= 0.0 {
        return grid;
    }
    let n = cfg.grid_size;
    for i in 0..n {
        if i + 1 == n {
            grid.push(lambda_max);
        } else {
            let e = (n - 1 - i) as f64 / (n - 1) as f64;
            grid.push(lambda_max * libm::pow(cfg.lambda_min_ratio, e));
        }
    }
    grid
}

/// Reusable path solver: one factorization serves every grid value.
pub struct PathSolver<'a> {
    engine: Engine<'a>,
}

impl<'a> PathSolver<'a> {
    pub fn new(ds: &'a Dataset, d: &'a CouplingMatrix, cfg: FitConfig) -> Result<Self> {
        Ok(PathSolver { engine: Engine::new(ds, d, cfg)? })
    }

    /// λ at which every predictor becomes fully pooled; 0 without fusion pairs.
    pub fn lambda_max(&self) -> f64 {
        if self.engine.problem.d.is_empty() {
            0.0
        } else {
            lambda_max_of(&self.engine.problem)
        }
    }

    pub fn layout(&self) -> &CoefficientLayout {
        &self.engine.problem.layout
    }

    /// Solves every value of an ascending grid, largest first, each warm
    /// started from its larger neighbour. The largest value starts from the
    /// pooled fit. Output is in grid order.
    pub fn solve_grid(&self, grid: &[f64]) -> Result<Vec<PathPoint>> {
        let p = &self.engine.problem;
        let mut points = Vec::with_capacity(grid.len());
        let mut warm: Option<AdmmState> = None;
        for &lambda in grid.iter().rev() {
            let start = match warm.take() {
                Some(s) => s,
                None => {
                    let zeros = vec![0.0; p.dim()];
                    let (pooled, _) = grouped_solve(p, &Grouping::pooled(p), &zeros);
                    AdmmState::from_slopes(p.d, lambda, pooled)
                }
            };
            let (point, state) = self.engine.solve(lambda, Some(&start))?;
            log::debug!(
                "lambda={lambda:.6e} iterations={} certified={}",
                point.diagnostics.iterations,
                point.diagnostics.certified
            );
            points.push(point);
            warm = Some(state);
        }
        points.reverse();
        Ok(points)
    }
}

/// Full regularization path on `{0} ∪ log-grid(λ_max·ratio, λ_max)`.
pub fn solve_path(ds: &Dataset, d: &CouplingMatrix, cfg: &FitConfig) -> Result<PathResult> {
    let solver = PathSolver::new(ds, d, *cfg)?;
    let lambda_max = solver.lambda_max();
    log::info!("lambda_max = {lambda_max:.17e}");
    let grid = make_grid(lambda_max, cfg);
    let points = solver.solve_grid(&grid)?;
    Ok(PathResult { layout: solver.layout().clone(), lambda_max, grid, points })
}
