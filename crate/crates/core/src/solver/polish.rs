//! Exact candidates from a fusion pattern, and their optimality check.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::flow::{supplies_routable, Edge};
use crate::linalg::{norm_inf, PsdSolver};

use super::problem::Problem;
use super::UnionFind;

/// Slope columns merged into groups that share one value.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Grouping {
    pub group_of: Vec<usize>,
    pub n_groups: usize,
}

impl Grouping {
    /// Merges the two columns of every coupling row for which `fused(row)` holds.
    pub fn from_rows(problem: &Problem<'_>, mut fused: impl FnMut(usize) -> bool) -> Self {
        let mut uf = UnionFind::new(problem.dim());
        for (i, r) in problem.d.rows.iter().enumerate() {
            if fused(i) {
                uf.union(r.plus, r.minus);
            }
        }
        let (group_of, n_groups) = uf.labels();
        Grouping { group_of, n_groups }
    }

    /// Every predictor shared across all of its classes.
    pub fn pooled(problem: &Problem<'_>) -> Self {
        Self::from_rows(problem, |_| true)
    }

    fn same(&self, a: usize, b: usize) -> bool {
        self.group_of[a] == self.group_of[b]
    }
}

/// Minimizes `½‖ỹ − X̃β‖² + linearᵀβ` over β constant on each group.
pub(crate) fn grouped_solve(problem: &Problem<'_>, grouping: &Grouping, linear: &[f64]) -> (Vec<f64>, bool) {
    let g = grouping.n_groups;
    let dim = problem.dim();
    let mut h = DMatrix::zeros(g, g);
    for c1 in 0..dim {
        let g1 = grouping.group_of[c1];
        for c2 in 0..dim {
            let a = problem.gram[(c1, c2)];
            if a != 0.0 {
                h[(g1, grouping.group_of[c2])] += a;
            }
        }
    }
    let mut rhs = DVector::zeros(g);
    for c in 0..dim {
        rhs[grouping.group_of[c]] += problem.xty[c] - linear[c];
    }
    let solver = PsdSolver::new(&h);
    let theta = solver.solve(&rhs);
    ((0..dim).map(|c| theta[grouping.group_of[c]]).collect(), solver.is_rank_deficient())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Checks the subgradient optimality condition at `slopes`, where columns in
/// one group are exactly equal and groups differ.
///
/// Rows across groups contribute `λ·w·sign(diff)`; rows inside a group must
/// absorb the remaining gradient with multipliers in `[−λ, λ]`, which is a
/// max-flow feasibility question per group.
pub(crate) fn certify(problem: &Problem<'_>, lambda: f64, slopes: &[f64], grouping: &Grouping) -> bool {
    let tol = 1e-9 * problem.scale * (1.0 + norm_inf(slopes));
    let tie = 1e-12 * (1.0 + norm_inf(slopes));
    let mut g = problem.neg_gradient(slopes);
    let mut edges_by_group: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); grouping.n_groups];
    for r in &problem.d.rows {
        let w = r.pair.weight;
        if grouping.same(r.plus, r.minus) {
            edges_by_group[grouping.group_of[r.plus]].push((r.plus, r.minus, lambda * w));
        } else {
            let diff = slopes[r.plus] - slopes[r.minus];
            if diff.abs() <= tie {
                return false;
            }
            let v = lambda * w * sign(diff);
            g[r.plus] -= v;
            g[r.minus] += v;
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); grouping.n_groups];
    for (c, &grp) in grouping.group_of.iter().enumerate() {
        members[grp].push(c);
    }
    for (grp, cols) in members.iter().enumerate() {
        if cols.len() == 1 {
            if g[cols[0]].abs() > tol {
                return false;
            }
            continue;
        }
        let local = |c: usize| cols.iter().position(|&x| x == c).unwrap_or_default();
        let supply: Vec<f64> = cols.iter().map(|&c| g[c]).collect();
        let edges: Vec<Edge> = edges_by_group[grp].iter().map(|&(a, b, cap)| (local(a), local(b), cap)).collect();
        if !supplies_routable(&supply, &edges, tol) {
            return false;
        }
    }
    true
}

/// Exact candidate for a fusion pattern: solves the grouped problem with the
/// signs of cross-group differences taken from `reference` (values of `Dβ`
/// or of the split variable), re-solving while the signs move, then runs
/// [`certify`].
pub(crate) fn polish(problem: &Problem<'_>, lambda: f64, grouping: &Grouping, reference: &[f64]) -> Option<Vec<f64>> {
    let rows = &problem.d.rows;
    let mut signs: Vec<f64> = rows
        .iter()
        .zip(reference)
        .map(|(r, &v)| if grouping.same(r.plus, r.minus) { 0.0 } else { sign(v) })
        .collect();
    for _ in 0..8 {
        let scaled: Vec<f64> = signs.iter().map(|s| lambda * s).collect();
        let linear = problem.d.apply_t(&scaled);
        let (slopes, _) = grouped_solve(problem, grouping, &linear);
        let next: Vec<f64> = rows
            .iter()
            .map(|r| if grouping.same(r.plus, r.minus) { 0.0 } else { sign(slopes[r.plus] - slopes[r.minus]) })
            .collect();
        if next == signs {
            return certify(problem, lambda, &slopes, grouping).then_some(slopes);
        }
        signs = next;
    }
    None
}
