//! Reference solver for small instances, independent of the ADMM code.
//!
//! Works on the full design (intercept columns included) and solves the
//! dual box-constrained quadratic program
//! `min ½vᵀHv − hᵀv, |v_r| ≤ λ` with `H = D Q⁻¹ Dᵀ`, `h = D Q⁻¹ Xᵀy`
//! by accelerated projected gradient with adaptive restart. The primal
//! point is recovered as `β = Q⁻¹(Xᵀy − Dᵀv)` and the duality gap bounds its
//! suboptimality.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fusion::CouplingMatrix;

use super::Coefficients;

/// Largest supported number of coefficients (slopes plus intercepts).
pub const ORACLE_MAX_DIM: usize = 30;
const MAX_ITER: usize = 5_000_000;
const CHECK_EVERY: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFit {
    pub coefficients: Coefficients,
    pub objective: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    /// Largest violation of `v_r = λ·sign((Dβ)_r)` over rows with `(Dβ)_r ≠ 0`.
    pub kkt_violation: f64,
}

pub fn qp_oracle(ds: &Dataset, d: &CouplingMatrix, lambda: f64) -> Result<OracleFit> {
    // Full variable order: for each class, its intercept then its slopes.
    let mut full_of_slope = Vec::new();
    let mut intercept_col = Vec::new();
    let mut dim = 0;
    for class in &ds.classes {
        intercept_col.push(dim);
        full_of_slope.extend((0..class.p()).map(|k| dim + 1 + k));
        dim += class.p() + 1;
    }
    if dim > ORACLE_MAX_DIM {
        return Err(Error::OracleTooLarge { dim, cap: ORACLE_MAX_DIM });
    }
    if d.ncols != full_of_slope.len() {
        return Err(Error::LengthMismatch("coupling matrix columns do not match the dataset"));
    }

    let mut q = DMatrix::zeros(dim, dim);
    let mut c = DVector::zeros(dim);
    let mut yy = 0.0;
    for (m, class) in ds.classes.iter().enumerate() {
        let z = class.design_with_intercept();
        let s = intercept_col[m];
        let k = z.ncols();
        q.view_mut((s, s), (k, k)).copy_from(&(z.transpose() * &z));
        c.rows_mut(s, k).copy_from(&(z.transpose() * &class.y));
        yy += class.y.norm_squared();
    }
    let chol = q.clone().cholesky().ok_or(Error::OracleSingular)?;

    let rows = d.nrows();
    let mut dfull = DMatrix::zeros(rows, dim);
    for (i, r) in d.rows.iter().enumerate() {
        dfull[(i, full_of_slope[r.plus])] = r.pair.weight;
        dfull[(i, full_of_slope[r.minus])] = -r.pair.weight;
    }

    let primal_objective = |beta: &DVector<f64>| -> f64 {
        let rss = yy - 2.0 * c.dot(beta) + beta.dot(&(&q * beta));
        0.5 * rss.max(0.0) + lambda * (&dfull * beta).abs().sum()
    };
    let dual_value = |v: &DVector<f64>| -> f64 {
        let r = &c - dfull.transpose() * v;
        0.5 * yy - 0.5 * r.dot(&chol.solve(&r))
    };
    let recover = |v: &DVector<f64>| chol.solve(&(&c - dfull.transpose() * v));

    let mut v = DVector::zeros(rows);
    let mut iterations = 0;
    if rows > 0 && lambda > 0.0 {
        let qinv_dt = chol.solve(&dfull.transpose());
        let h_mat = &dfull * &qinv_dt;
        let h_vec = &dfull * chol.solve(&c);
        let lip = SymmetricEigen::new(h_mat.clone()).eigenvalues.max().max(f64::MIN_POSITIVE);
        let project = |x: &mut DVector<f64>| x.iter_mut().for_each(|e| *e = e.clamp(-lambda, lambda));

        let mut y = v.clone();
        let mut t = 1.0f64;
        let mut last_primal = f64::INFINITY;
        while iterations < MAX_ITER {
            iterations += 1;
            let grad = &h_mat * &y - &h_vec;
            let mut next = &y - grad.clone() / lip;
            project(&mut next);
            let step = &next - &v;
            if grad.dot(&step) > 0.0 {
                t = 1.0;
                y = next.clone();
            } else {
                let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
                y = &next + step * ((t - 1.0) / t_next);
                t = t_next;
            }
            v = next;
            if iterations % CHECK_EVERY == 0 {
                let beta = recover(&v);
                let p = primal_objective(&beta);
                let gap = p - dual_value(&v);
                let stall = (last_primal - p).abs();
                if gap <= 1e-13 * (1.0 + p.abs()) || stall <= 1e-15 * (1.0 + p.abs()) {
                    break;
                }
                last_primal = p;
            }
        }
    }

    let beta = recover(&v);
    let objective = primal_objective(&beta);
    let duality_gap = objective - dual_value(&v);
    let dbeta = &dfull * &beta;
    let kkt_violation = dbeta
        .iter()
        .zip(v.iter())
        .filter(|(x, _)| x.abs() > 1e-8)
        .map(|(x, vr)| (vr - lambda * x.signum()).abs())
        .fold(0.0, f64::max);

    let slopes: Vec<f64> = full_of_slope.iter().map(|&k| beta[k]).collect();
    let intercepts = intercept_col.iter().map(|&k| beta[k]).collect();
    Ok(OracleFit { coefficients: Coefficients { slopes, intercepts }, objective, duality_gap, iterations, kkt_violation })
}
