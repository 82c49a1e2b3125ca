//! Dense symmetric solves used by the least-squares fits and the ADMM step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

/// Relative eigenvalue floor below which a direction counts as null.
const RANK_TOL: f64 = 1e-10;

/// Solver for `A x = b` with `A` symmetric positive semidefinite.
///
/// Uses a Cholesky factor when `A` is comfortably positive definite and a
/// pseudo-inverse otherwise, which yields the minimum-norm solution of a
/// consistent singular system.
#[derive(Debug, Clone)]
pub enum PsdSolver {
    Cholesky(Cholesky<f64, Dyn>),
    PseudoInverse(DMatrix<f64>),
}

impl PsdSolver {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        if n == 0 {
            return PsdSolver::PseudoInverse(DMatrix::zeros(0, 0));
        }
        let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        if max_diag > 0.0 {
            if let Some(chol) = Cholesky::new(a.clone()) {
                let l = chol.l_dirty();
                let min_pivot = (0..n).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
                if min_pivot > RANK_TOL * max_diag {
                    return PsdSolver::Cholesky(chol);
                }
            }
        }
        PsdSolver::PseudoInverse(pseudo_inverse(a))
    }

    pub fn is_rank_deficient(&self) -> bool {
        matches!(self, PsdSolver::PseudoInverse(_))
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            PsdSolver::Cholesky(c) => c.solve(b),
            PsdSolver::PseudoInverse(p) => p * b,
        }
    }
}

/// Moore-Penrose inverse of a symmetric matrix via its eigendecomposition.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = RANK_TOL * top.max(f64::MIN_POSITIVE);
    let mut out = DMatrix::zeros(n, n);
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev.abs() > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / ev;
        }
    }
    out
}

/// Euclidean norm of a slice.
pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
