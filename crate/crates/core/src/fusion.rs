//! Pairwise fusion weights and the sparse coupling matrix `D`.
//!
//! Every pair of classes that both carry predictor `j` contributes one row
//! `w·(β_j^(a) − β_j^(b))` to `Dβ`. The raw weight of a class pair is the
//! ratio of the larger to the smaller sample size; weights are normalized by
//! the largest raw weight over all class pairs.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionPair {
    pub predictor: usize,
    /// Class indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub raw_weight: f64,
    pub weight: f64,
}

pub fn size_ratio(na: usize, nb: usize) -> f64 {
    na.max(nb) as f64 / na.min(nb) as f64
}

/// Pairs for every predictor shared by two classes, ordered by predictor then
/// class pair.
pub fn build_pairs(ds: &Dataset) -> Vec<FusionPair> {
    let sizes = ds.sizes();
    let available: Vec<&[usize]> = ds.classes.iter().map(|c| c.available.as_slice()).collect();
    pairs_from(ds.predictors.len(), &available, &sizes)
}

/// Same as [`build_pairs`] from availability lists and class sizes.
pub fn pairs_from(n_predictors: usize, available: &[&[usize]], sizes: &[usize]) -> Vec<FusionPair> {
    let m = sizes.len();
    let mut pairs = Vec::new();
    for j in 0..n_predictors {
        let carriers: Vec<usize> = (0..m).filter(|&c| available[c].binary_search(&j).is_ok()).collect();
        for (i, &a) in carriers.iter().enumerate() {
            for &b in &carriers[i + 1..] {
                let raw = size_ratio(sizes[a], sizes[b]);
                pairs.push(FusionPair { predictor: j, a, b, raw_weight: raw, weight: raw });
            }
        }
    }
    // One normalizer for every predictor: the largest ratio among the
    // class pairs that share something.
    let max_ratio = pairs.iter().map(|p| p.raw_weight).fold(0.0, f64::max);
    for p in &mut pairs {
        p.weight = p.raw_weight / max_ratio;
    }
    pairs
}

/// Maps `(class, predictor)` to a slope column. Slopes are stored class by
/// class, each class's predictors in ascending order. Intercepts are not part
/// of the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLayout {
    pub offsets: Vec<usize>,
    pub available: Vec<Vec<usize>>,
    pub len: usize,
}

impl CoefficientLayout {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut offsets = Vec::with_capacity(ds.classes.len());
        let mut len = 0;
        for c in &ds.classes {
            offsets.push(len);
            len += c.p();
        }
        CoefficientLayout { offsets, available: ds.classes.iter().map(|c| c.available.clone()).collect(), len }
    }

    pub fn n_classes(&self) -> usize {
        self.offsets.len()
    }

    pub fn col(&self, class: usize, predictor: usize) -> Option<usize> {
        let pos = self.available.get(class)?.binary_search(&predictor).ok()?;
        Some(self.offsets[class] + pos)
    }

    /// Column range of one class's slopes.
    pub fn class_range(&self, class: usize) -> core::ops::Range<usize> {
        self.offsets[class]..self.offsets[class] + self.available[class].len()
    }

    /// `(column, class, predictor)` for every slope.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.available
            .iter()
            .enumerate()
            .flat_map(move |(m, av)| av.iter().enumerate().map(move |(k, &j)| (self.offsets[m] + k, m, j)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub pair: FusionPair,
    /// Column holding `+weight` (class `a`).
    pub plus: usize,
    /// Column holding `−weight` (class `b`).
    pub minus: usize,
}

/// Sparse `D` with exactly two non-zeros per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub rows: Vec<CouplingRow>,
    pub ncols: usize,
}

/// Assembles `D` over the slope columns of `layout`, rows sorted by
/// predictor, then first class, then second class.
pub fn build_d(pairs: &[FusionPair], layout: &CoefficientLayout) -> Result<CouplingMatrix> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by_key(|p| (p.predictor, p.a, p.b));
    let rows = sorted
        .into_iter()
        .map(|pair| {
            let col = |class| {
                layout.col(class, pair.predictor).ok_or(Error::MissingCoefficient { class, predictor: pair.predictor })
            };
            Ok(CouplingRow { pair, plus: col(pair.a)?, minus: col(pair.b)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingMatrix { rows, ncols: layout.len })
}

impl CouplingMatrix {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        build_d(&build_pairs(ds), &CoefficientLayout::from_dataset(ds))
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `Dβ`.
    pub fn apply(&self, beta: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.pair.weight * (beta[r.plus] - beta[r.minus])).collect()
    }

    /// `Dᵀv`.
    pub fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, &vr) in self.rows.iter().zip(v) {
            out[r.plus] += r.pair.weight * vr;
            out[r.minus] -= r.pair.weight * vr;
        }
        out
    }

    /// `‖Dβ‖₁`.
    pub fn penalty(&self, beta: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.pair.weight * (beta[r.plus] - beta[r.minus]).abs()).sum()
    }

    /// `DᵀD`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.ncols, self.ncols);
        for r in &self.rows {
            let w2 = r.pair.weight * r.pair.weight;
            g[(r.plus, r.plus)] += w2;
            g[(r.minus, r.minus)] += w2;
            g[(r.plus, r.minus)] -= w2;
            g[(r.minus, r.plus)] -= w2;
        }
        g
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows(), self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            d[(i, r.plus)] = r.pair.weight;
            d[(i, r.minus)] = -r.pair.weight;
        }
        d
    }

    /// `(row, col, value)` for every non-zero.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| [(i, r.plus, r.pair.weight), (i, r.minus, -r.pair.weight)])
            .collect()
    }
}
