use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fusion::{CoefficientLayout, CouplingMatrix};
use crate::linalg::PsdSolver;

use super::Coefficients;

/// Class-centered least-squares data for the slope-only problem.
#[derive(Debug, Clone)]
pub(crate) struct Problem<'a> {
    pub ds: &'a Dataset,
    pub d: &'a CouplingMatrix,
    pub layout: CoefficientLayout,
    pub x_mean: Vec<DVector<f64>>,
    pub y_mean: Vec<f64>,
    pub xc: Vec<DMatrix<f64>>,
    pub yc: Vec<DVector<f64>>,
    /// Block-diagonal `X̃ᵀX̃`.
    pub gram: DMatrix<f64>,
    /// `X̃ᵀỹ`.
    pub xty: DVector<f64>,
    /// Scale used for absolute slack in optimality checks.
    pub scale: f64,
}

impl<'a> Problem<'a> {
    pub fn new(ds: &'a Dataset, d: &'a CouplingMatrix) -> Result<Self> {
        let layout = CoefficientLayout::from_dataset(ds);
        if d.ncols != layout.len {
            return Err(Error::LengthMismatch("coupling matrix columns do not match the dataset layout"));
        }
        let mut x_mean = Vec::new();
        let mut y_mean = Vec::new();
        let mut xc = Vec::new();
        let mut yc = Vec::new();
        let mut gram = DMatrix::zeros(layout.len, layout.len);
        let mut xty = DVector::zeros(layout.len);
        for (m, class) in ds.classes.iter().enumerate() {
            let n = class.n() as f64;
            let xm = DVector::from_iterator(class.p(), class.x.column_iter().map(|c| c.sum() / n));
            let ym = class.y.sum() / n;
            let mut x = class.x.clone();
            for (k, mut col) in x.column_iter_mut().enumerate() {
                col.add_scalar_mut(-xm[k]);
            }
            let y = class.y.add_scalar(-ym);
            let r = layout.class_range(m);
            gram.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&(x.transpose() * &x));
            xty.rows_mut(r.start, r.len()).copy_from(&(x.transpose() * &y));
            x_mean.push(xm);
            y_mean.push(ym);
            xc.push(x);
            yc.push(y);
        }
        let scale = 1.0 + xty.amax() + gram.amax();
        Ok(Problem { ds, d, layout, x_mean, y_mean, xc, yc, gram, xty, scale })
    }

    pub fn n_classes(&self) -> usize {
        self.xc.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.len
    }

    fn slopes_of<'s>(&self, slopes: &'s [f64], m: usize) -> &'s [f64] {
        &slopes[self.layout.class_range(m)]
    }

    pub fn intercepts(&self, slopes: &[f64]) -> Vec<f64> {
        (0..self.n_classes())
            .map(|m| {
                let b = self.slopes_of(slopes, m);
                self.y_mean[m] - self.x_mean[m].iter().zip(b).map(|(x, b)| x * b).sum::<f64>()
            })
            .collect()
    }

    pub fn coefficients(&self, slopes: Vec<f64>) -> Coefficients {
        let intercepts = self.intercepts(&slopes);
        Coefficients { slopes, intercepts }
    }

    pub fn rss(&self, slopes: &[f64]) -> f64 {
        (0..self.n_classes())
            .map(|m| {
                let b = DVector::from_column_slice(self.slopes_of(slopes, m));
                (&self.yc[m] - &self.xc[m] * b).norm_squared()
            })
            .sum()
    }

    /// `X̃ᵀỹ − X̃ᵀX̃β`, the negative gradient of the half-RSS.
    pub fn neg_gradient(&self, slopes: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(slopes);
        (&self.xty - &self.gram * b).iter().copied().collect()
    }

    /// Per-class least squares (the λ = 0 solution), minimum norm where a
    /// class design is rank deficient.
    pub fn separate(&self) -> (Vec<f64>, Vec<String>) {
        let mut slopes = Vec::with_capacity(self.dim());
        let mut deficient = Vec::new();
        for m in 0..self.n_classes() {
            let r = self.layout.class_range(m);
            let block = self.gram.view((r.start, r.start), (r.len(), r.len())).into_owned();
            let solver = PsdSolver::new(&block);
            if solver.is_rank_deficient() && !r.is_empty() {
                log::warn!("class `{}` has a rank-deficient design; using minimum-norm least squares", self.ds.classes[m].id);
                deficient.push(self.ds.classes[m].id.clone());
            }
            let rhs = self.xty.rows(r.start, r.len()).into_owned();
            slopes.extend(solver.solve(&rhs).iter());
        }
        (slopes, deficient)
    }
}

/// `½·RSS + λ·‖Dβ‖₁` for coefficients on the standardized scale, intercepts included.
pub fn objective(ds: &Dataset, d: &CouplingMatrix, coefficients: &Coefficients, lambda: f64) -> f64 {
    let layout = CoefficientLayout::from_dataset(ds);
    let mut rss = 0.0;
    for (m, class) in ds.classes.iter().enumerate() {
        let b = DVector::from_column_slice(&coefficients.slopes[layout.class_range(m)]);
        let fit = (&class.x * b).add_scalar(coefficients.intercepts[m]);
        rss += (&class.y - fit).norm_squared();
    }
    0.5 * rss + lambda * d.penalty(&coefficients.slopes)
}
