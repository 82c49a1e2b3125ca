//! The three least-squares baselines at the ends of the path.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::fusion::{CoefficientLayout, CouplingMatrix};
use crate::linalg::PsdSolver;

use super::polish::{grouped_solve, Grouping};
use super::problem::Problem;
use super::Coefficients;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointFit {
    pub coefficients: Coefficients,
    /// Classes (or `"(pooled)"`) that needed a minimum-norm solve.
    pub rank_deficient: Vec<String>,
}

/// Independent OLS per class on its available predictors plus intercept.
pub fn fit_separate(ds: &Dataset) -> Result<EndpointFit> {
    let d = CouplingMatrix { rows: Vec::new(), ncols: CoefficientLayout::from_dataset(ds).len };
    let problem = Problem::new(ds, &d)?;
    let (slopes, rank_deficient) = problem.separate();
    Ok(EndpointFit { coefficients: problem.coefficients(slopes), rank_deficient })
}

/// One slope per predictor shared by every class that carries it, with
/// per-class intercepts.
pub fn fit_new_pooled(ds: &Dataset) -> Result<EndpointFit> {
    let d = CouplingMatrix::from_dataset(ds)?;
    let problem = Problem::new(ds, &d)?;
    let (slopes, deficient) = grouped_solve(&problem, &Grouping::pooled(&problem), &vec![0.0; problem.dim()]);
    let rank_deficient = if deficient { vec![String::from("(pooled)")] } else { Vec::new() };
    Ok(EndpointFit { coefficients: problem.coefficients(slopes), rank_deficient })
}

/// Single OLS on the stacked data, restricted to predictors available in
/// every class, with one common intercept. Excluded predictors get slope 0.
pub fn fit_classic_pooled(ds: &Dataset) -> Result<EndpointFit> {
    let layout = CoefficientLayout::from_dataset(ds);
    let shared: Vec<usize> = (0..ds.predictors.len()).filter(|&j| ds.classes.iter().all(|c| c.has(j))).collect();
    let n = ds.n_total();
    let k = shared.len() + 1;
    let mut z = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    let mut row = 0;
    for class in &ds.classes {
        let pos: Vec<usize> = shared.iter().map(|j| class.available.binary_search(j).unwrap_or_default()).collect();
        for i in 0..class.n() {
            z[(row, 0)] = 1.0;
            for (c, &p) in pos.iter().enumerate() {
                z[(row, c + 1)] = class.x[(i, p)];
            }
            y[row] = class.y[i];
            row += 1;
        }
    }
    let solver = PsdSolver::new(&(z.transpose() * &z));
    let theta = solver.solve(&(z.transpose() * &y));
    let mut slopes = vec![0.0; layout.len];
    for (col, _, j) in layout.entries() {
        if let Ok(c) = shared.binary_search(&j) {
            slopes[col] = theta[c + 1];
        }
    }
    let rank_deficient = if solver.is_rank_deficient() { vec![String::from("(pooled)")] } else { Vec::new() };
    Ok(EndpointFit { coefficients: Coefficients { slopes, intercepts: vec![theta[0]; ds.classes.len()] }, rank_deficient })
}
