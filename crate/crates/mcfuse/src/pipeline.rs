//! Ingest → mask → standardize → fit, shared by the commands and the service.

use std::path::Path;

use mcfuse_core::selection::{aggregate, fit_fold, make_folds, CrossValidation};
use mcfuse_core::{
    aic_select, solve_path, standardize, AicCurve, CouplingMatrix, Dataset, FitConfig, GroupedData, PathResult,
    RawTable, StandardizationStats,
};
use rayon::prelude::*;

use crate::error::Result;
use crate::ingest::read_table;
use crate::schema::Schema;

pub struct Prepared {
    pub schema: Schema,
    pub table: RawTable,
    pub grouped: GroupedData,
    pub dataset: Dataset,
    pub stats: StandardizationStats,
    pub d: CouplingMatrix,
}

impl Prepared {
    pub fn load(data: &Path, schema: &Path) -> Result<Prepared> {
        let schema = Schema::load(schema)?;
        let table = read_table(data, &schema)?;
        Prepared::from_table(schema, table)
    }

    pub fn from_table(schema: Schema, table: RawTable) -> Result<Prepared> {
        let range = schema.response_range.map(|[lo, hi]| (lo, hi));
        let raw = table.group(range)?;
        if raw.dropped_missing_response > 0 {
            log::info!("dropped {} rows with missing response", raw.dropped_missing_response);
        }
        let grouped = raw.mask(schema.mask);
        for class in &grouped.classes {
            for &j in &class.masked {
                log::info!("predictor `{}` unavailable for class `{}`", grouped.predictors[j], class.id);
            }
        }
        let (dataset, stats) = standardize(&grouped)?;
        if dataset.listwise_dropped > 0 {
            log::warn!("deleted {} rows with missing predictor cells", dataset.listwise_dropped);
        }
        let d = CouplingMatrix::from_dataset(&dataset)?;
        Ok(Prepared { schema, table, grouped, dataset, stats, d })
    }

    pub fn class_ids(&self) -> Vec<String> {
        self.dataset.classes.iter().map(|c| c.id.clone()).collect()
    }

    pub fn path(&self, cfg: &FitConfig) -> Result<PathResult> {
        let path = solve_path(&self.dataset, &self.d, cfg)?;
        for p in &path.points {
            let diag = &p.diagnostics;
            log::debug!(
                "lambda={:.6e} iterations={} primal={:.3e} dual={:.3e} certified={}",
                p.lambda,
                diag.iterations,
                diag.primal_residual,
                diag.dual_residual,
                diag.certified
            );
        }
        let uncertified = path.points.iter().filter(|p| !p.diagnostics.certified).count();
        if uncertified > 0 {
            log::info!("{uncertified} of {} grid points met the ADMM tolerance without an exact certificate", path.points.len());
        }
        Ok(path)
    }

    pub fn aic(&self, path: &PathResult) -> AicCurve {
        aic_select(path, self.dataset.n_total())
    }

    /// K-fold cross-validation on the grid of `path`, folds in parallel.
    pub fn cross_validate(&self, path: &PathResult, cfg: &FitConfig, k: usize, seed: u64) -> Result<CrossValidation> {
        let folds = make_folds(&self.dataset, k, seed)?;
        let outcomes = (0..k)
            .into_par_iter()
            .map(|f| fit_fold(&self.dataset, &folds, f, &path.grid, cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let cv = aggregate(&self.dataset, &folds, &path.grid, outcomes);
        for (fold, m) in &cv.report.fallback {
            log::warn!("fold {fold}: class `{}` has no training rows; used the pooled fallback", self.dataset.classes[*m].id);
        }
        Ok(cv)
    }
}
