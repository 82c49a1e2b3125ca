use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::data::Dataset;
use crate::error::{Error, NotConverged, Result};
use crate::fusion::CouplingMatrix;
use crate::linalg::{norm2, PsdSolver};

use super::path::{degrees_of_freedom, fusion_partition};
use super::polish::{certify, polish, Grouping};
use super::problem::Problem;
use super::{Coefficients, Diagnostics, FitConfig, PathPoint};

/// Iterations between attempts to certify the current fusion pattern.
const CERTIFY_EVERY: usize = 25;

/// ADMM iterate: slopes, split variable `z ≈ Dβ` and scaled dual `u`.
#[derive(Debug, Clone)]
pub(crate) struct AdmmState {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

impl AdmmState {
    pub fn from_slopes(d: &CouplingMatrix, lambda: f64, beta: Vec<f64>) -> Self {
        let z = d.apply(&beta);
        let u = alloc::vec![0.0; z.len()];
        AdmmState { lambda, beta, z, u }
    }
}

fn sign_pattern(z: &[f64]) -> Vec<i8> {
    z.iter().map(|v| if *v > 0.0 { 1 } else if *v < 0.0 { -1 } else { 0 }).collect()
}

fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// `tr(X̃ᵀX̃) / tr(DᵀD)`: puts the split term on the scale of the data term,
/// so `admm_rho` is unitless.
fn rho_scale(gram: &nalgebra::DMatrix<f64>, dtd: &nalgebra::DMatrix<f64>) -> f64 {
    let (g, d) = (gram.trace(), dtd.trace());
    if g > 0.0 && d > 0.0 {
        g / d
    } else {
        1.0
    }
}

/// Problem data plus the factored ADMM system `X̃ᵀX̃ + ρDᵀD`, reusable across λ.
pub(crate) struct Engine<'a> {
    pub problem: Problem<'a>,
    kkt: PsdSolver,
    cfg: FitConfig,
    /// Penalty parameter actually used: `admm_rho` times [`rho_scale`].
    rho: f64,
    separate: Vec<f64>,
    rank_deficient: Vec<String>,
}

impl<'a> Engine<'a> {
    pub fn new(ds: &'a Dataset, d: &'a CouplingMatrix, cfg: FitConfig) -> Result<Self> {
        cfg.validate()?;
        let problem = Problem::new(ds, d)?;
        let dtd = d.gram();
        let rho = cfg.admm_rho * rho_scale(&problem.gram, &dtd);
        let kkt = PsdSolver::new(&(&problem.gram + dtd * rho));
        let (separate, rank_deficient) = problem.separate();
        Ok(Engine { problem, kkt, cfg, rho, separate, rank_deficient })
    }

    pub fn separate_state(&self, lambda: f64) -> AdmmState {
        AdmmState::from_slopes(self.problem.d, lambda, self.separate.clone())
    }

    fn diagnostics(&self, iterations: usize, primal: f64, dual: f64, certified: bool) -> Diagnostics {
        Diagnostics {
            iterations,
            primal_residual: primal,
            dual_residual: dual,
            certified,
            rank_deficient: self.rank_deficient.clone(),
        }
    }

    pub fn point(&self, lambda: f64, slopes: Vec<f64>, diagnostics: Diagnostics) -> PathPoint {
        let p = &self.problem;
        let rss = p.rss(&slopes);
        let penalty = p.d.penalty(&slopes);
        let partition = fusion_partition(p.ds, &p.layout, &slopes, self.cfg.fuse_tol);
        let df = degrees_of_freedom(&partition, p.n_classes());
        PathPoint {
            lambda,
            coefficients: p.coefficients(slopes),
            rss,
            penalty,
            objective: 0.5 * rss + lambda * penalty,
            df,
            partition,
            diagnostics,
        }
    }

    /// Candidate groupings derived from the slopes (within `fuse_tol`) and,
    /// when given, from exact zeros of the split variable.
    fn try_certify(&self, lambda: f64, beta: &[f64], z: Option<&[f64]>) -> Option<Vec<f64>> {
        let p = &self.problem;
        let dbeta = p.d.apply(beta);
        if let Some(z) = z {
            let by_z = Grouping::from_rows(p, |i| z[i] == 0.0);
            if let Some(s) = polish(p, lambda, &by_z, z) {
                return Some(s);
            }
        }
        let tol = self.cfg.fuse_tol;
        let by_beta = Grouping::from_rows(p, |i| {
            let r = &p.d.rows[i];
            (beta[r.plus] - beta[r.minus]).abs() <= tol
        });
        polish(p, lambda, &by_beta, &dbeta)
    }

    pub fn solve(&self, lambda: f64, warm: Option<&AdmmState>) -> Result<(PathPoint, AdmmState)> {
        let p = &self.problem;
        let d = p.d;
        if lambda == 0.0 || d.is_empty() {
            let slopes = self.separate.clone();
            let singletons = Grouping::from_rows(p, |_| false);
            let certified = certify(p, lambda, &slopes, &singletons);
            let state = AdmmState::from_slopes(d, lambda, slopes.clone());
            return Ok((self.point(lambda, slopes, self.diagnostics(0, 0.0, 0.0, certified)), state));
        }

        let mut state = match warm {
            Some(w) => {
                let mut s = w.clone();
                if w.lambda > 0.0 {
                    let ratio = lambda / w.lambda;
                    s.u.iter_mut().for_each(|u| *u *= ratio);
                }
                s.lambda = lambda;
                s
            }
            None => self.separate_state(lambda),
        };

        if let Some(slopes) = self.try_certify(lambda, &state.beta, None) {
            let next = AdmmState::from_slopes(d, lambda, slopes.clone());
            return Ok((self.point(lambda, slopes, self.diagnostics(0, 0.0, 0.0, true)), next));
        }

        let rho = self.rho;
        let kappa = lambda / rho;
        let sqrt_rows = libm::sqrt(d.nrows() as f64);
        let sqrt_cols = libm::sqrt(p.dim() as f64);
        let mut primal = f64::INFINITY;
        let mut dual = f64::INFINITY;
        let mut tried: Vec<i8> = Vec::new();
        for iter in 1..=self.cfg.max_iter {
            let zu: Vec<f64> = state.z.iter().zip(&state.u).map(|(z, u)| rho * (z - u)).collect();
            let rhs = &p.xty + DVector::from_vec(d.apply_t(&zu));
            state.beta = self.kkt.solve(&rhs).iter().copied().collect();
            let dbeta = d.apply(&state.beta);
            let z_old = core::mem::take(&mut state.z);
            state.z = dbeta.iter().zip(&state.u).map(|(x, u)| soft_threshold(x + u, kappa)).collect();
            for ((u, x), z) in state.u.iter_mut().zip(&dbeta).zip(&state.z) {
                *u += x - z;
            }

            let r: Vec<f64> = dbeta.iter().zip(&state.z).map(|(x, z)| x - z).collect();
            let dz: Vec<f64> = state.z.iter().zip(&z_old).map(|(a, b)| a - b).collect();
            primal = norm2(&r);
            dual = rho * norm2(&d.apply_t(&dz));
            let eps_pri = sqrt_rows * self.cfg.tol_abs + self.cfg.tol_rel * norm2(&dbeta).max(norm2(&state.z));
            let eps_dual = sqrt_cols * self.cfg.tol_abs + self.cfg.tol_rel * rho * norm2(&d.apply_t(&state.u));
            let converged = primal <= eps_pri && dual <= eps_dual;

            let pattern = if converged || iter % CERTIFY_EVERY == 0 { sign_pattern(&state.z) } else { Vec::new() };
            if converged || (iter % CERTIFY_EVERY == 0 && pattern != tried) {
                let attempt = self.try_certify(lambda, &state.beta, Some(&state.z));
                tried = pattern;
                if let Some(slopes) = attempt {
                    let diag = self.diagnostics(iter, primal, dual, true);
                    state.beta = slopes.clone();
                    return Ok((self.point(lambda, slopes, diag), state));
                }
            }
            if converged {
                log::debug!("lambda={lambda}: converged in {iter} iterations without certificate");
                let diag = self.diagnostics(iter, primal, dual, false);
                return Ok((self.point(lambda, state.beta.clone(), diag), state));
            }
        }
        Err(Error::NotConverged(alloc::boxed::Box::new(NotConverged {
            lambda,
            iterations: self.cfg.max_iter,
            primal_residual: primal,
            dual_residual: dual,
            last: p.coefficients(state.beta),
        })))
    }
}

/// Fused-lasso solution at a single λ, optionally warm-started from
/// previously fitted coefficients.
pub fn solve_at(
    ds: &Dataset,
    d: &CouplingMatrix,
    lambda: f64,
    warm: Option<&Coefficients>,
    cfg: &FitConfig,
) -> Result<PathPoint> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig("lambda must be finite and non-negative"));
    }
    let engine = Engine::new(ds, d, *cfg)?;
    let warm = match warm {
        Some(c) => {
            if c.slopes.len() != engine.problem.dim() {
                return Err(Error::LengthMismatch("warm start has the wrong number of slopes"));
            }
            Some(AdmmState::from_slopes(d, lambda, c.slopes.clone()))
        }
        None => None,
    };
    engine.solve(lambda, warm.as_ref()).map(|(point, _)| point)
}
