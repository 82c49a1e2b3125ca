use alloc::vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fusion::CouplingMatrix;
use crate::linalg::norm_inf;

use super::polish::{certify, grouped_solve, Grouping};
use super::problem::Problem;

/// Relative width of the final bisection bracket.
const BISECT_REL: f64 = 1e-9;

/// Smallest λ at which the fully pooled fit is optimal.
///
/// The pooled slopes do not depend on λ, so optimality reduces to routing
/// the pooled gradient through the coupling rows with capacities `λ·w`.
/// That test is monotone in λ: the bracket is found by doubling and then
/// narrowed by bisection. The upper end of the bracket is returned.
pub fn lambda_max(ds: &Dataset, d: &CouplingMatrix) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::NothingToFuse);
    }
    let problem = Problem::new(ds, d)?;
    Ok(lambda_max_of(&problem))
}

pub(crate) fn lambda_max_of(problem: &Problem<'_>) -> f64 {
    let pooled = Grouping::pooled(problem);
    let (slopes, _) = grouped_solve(problem, &pooled, &vec![0.0; problem.dim()]);
    let feasible = |lambda: f64| certify(problem, lambda, &slopes, &pooled);
    if feasible(0.0) {
        return 0.0;
    }
    let min_w = problem.d.rows.iter().map(|r| r.pair.weight).fold(f64::INFINITY, f64::min);
    let mut hi = (norm_inf(&problem.neg_gradient(&slopes)) / min_w).max(f64::MIN_POSITIVE);
    let mut lo = 0.0;
    while !feasible(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > BISECT_REL * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
