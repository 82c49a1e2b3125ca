//! Choosing λ along the path: AIC on the full fit, or K-fold cross-validated
//! mean absolute error.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fusion::{CoefficientLayout, CouplingMatrix};
use crate::solver::{fit_classic_pooled, fit_new_pooled, fit_separate, make_grid, predict_row, Coefficients, FitConfig, PathResult, PathSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicCurve {
    pub n: usize,
    pub lambda: Vec<f64>,
    /// Mean squared residual over all `n` observations.
    pub sigma2: Vec<f64>,
    pub df: Vec<usize>,
    pub aic: Vec<f64>,
    pub selected: usize,
}

pub fn aic_value(sigma2: f64, df: usize, n: usize) -> f64 {
    libm::log(sigma2) + 2.0 * df as f64 / n as f64
}

/// Index of the smallest value; ties go to the later (larger λ) entry.
fn argmin_last(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v <= values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

pub fn aic_select(path: &PathResult, n: usize) -> AicCurve {
    let sigma2: Vec<f64> = path.points.iter().map(|p| p.rss / n as f64).collect();
    let df: Vec<usize> = path.points.iter().map(|p| p.df).collect();
    let aic: Vec<f64> = sigma2.iter().zip(&df).map(|(s, d)| aic_value(*s, *d, n)).collect();
    let selected = argmin_last(&aic);
    AicCurve { n, lambda: path.grid.clone(), sigma2, df, aic, selected }
}

/// Class-stratified fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folds {
    pub k: usize,
    pub seed: u64,
    /// `assignment[m][i]` is the test fold of row `i` of class `m`.
    pub assignment: Vec<Vec<usize>>,
}

impl Folds {
    /// Rows kept for training when fold `k` is held out.
    pub fn training_mask(&self, k: usize) -> Vec<Vec<bool>> {
        self.assignment.iter().map(|a| a.iter().map(|&f| f != k).collect()).collect()
    }

    pub fn test_rows(&self, k: usize) -> Vec<(usize, usize)> {
        let mut rows = Vec::new();
        for (m, a) in self.assignment.iter().enumerate() {
            rows.extend(a.iter().enumerate().filter(|(_, &f)| f == k).map(|(i, _)| (m, i)));
        }
        rows
    }
}

/// Shuffles each class with one seeded stream and deals its rows round-robin
/// into `k` blocks. Each class starts dealing where the previous one stopped,
/// so small classes do not all pile into the first folds.
pub fn make_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::InvalidConfig("K must be at least 2"));
    }
    if ds.n_total() < k {
        return Err(Error::InvalidConfig("fewer observations than folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offset = 0;
    let mut assignment = Vec::with_capacity(ds.classes.len());
    for class in &ds.classes {
        let n = class.n();
        if n < k {
            log::warn!("class {} has {n} rows and appears in only {n} of {k} test folds", class.id);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut fold = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            fold[i] = (offset + pos) % k;
        }
        offset = (offset + n) % k;
        assignment.push(fold);
    }
    Ok(Folds { k, seed, assignment })
}

/// Out-of-fold predictions for one held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    /// `(class, row)` of each test observation.
    pub rows: Vec<(usize, usize)>,
    /// `path[l][t]`: prediction at grid value `l` for test row `t`.
    pub path: Vec<Vec<f64>>,
    pub separate: Vec<f64>,
    pub new_pooled: Vec<f64>,
    pub classic_pooled: Vec<f64>,
    /// Classes with no training rows in this fold; predicted from the
    /// pooled fallback model.
    pub fallback: Vec<usize>,
}

/// Model used for a class without training rows: the training fold's new
/// pooled slopes and the size-weighted mean of its intercepts.
struct Fallback {
    slope: Vec<f64>,
    intercept: f64,
}

impl Fallback {
    fn new(train: &Dataset, pooled: &Coefficients) -> Self {
        let layout = CoefficientLayout::from_dataset(train);
        let mut slope = vec![0.0; train.predictors.len()];
        for (col, _, j) in layout.entries() {
            slope[j] = pooled.slopes[col];
        }
        let sizes = train.sizes();
        let total: usize = sizes.iter().sum();
        let intercept = sizes.iter().zip(&pooled.intercepts).map(|(n, b)| *n as f64 * b).sum::<f64>() / total as f64;
        Fallback { slope, intercept }
    }

    fn predict(&self, available: &[usize], row: &[f64]) -> f64 {
        self.intercept + available.iter().zip(row).map(|(&j, x)| self.slope[j] * x).sum::<f64>()
    }
}

/// Refits the path on every block but `fold` (with a coupling matrix rebuilt
/// from the training rows) and predicts the held-out block at each value of
/// `grid`, plus the three least-squares baselines.
pub fn fit_fold(ds: &Dataset, folds: &Folds, fold: usize, grid: &[f64], cfg: &FitConfig) -> Result<FoldOutcome> {
    let (train, map) = ds.subset(&folds.training_mask(fold));
    let mut local = vec![None; ds.classes.len()];
    for (t, &m) in map.iter().enumerate() {
        local[m] = Some(t);
    }
    let d = CouplingMatrix::from_dataset(&train)?;
    let solver = PathSolver::new(&train, &d, *cfg)?;
    let points = solver.solve_grid(grid)?;
    let layout = solver.layout();
    let separate = fit_separate(&train)?.coefficients;
    let new_pooled = fit_new_pooled(&train)?.coefficients;
    let classic = fit_classic_pooled(&train)?.coefficients;
    let fallback = Fallback::new(&train, &new_pooled);
    let classic_fallback = Fallback::new(&train, &classic);

    let rows = folds.test_rows(fold);
    let mut out = FoldOutcome {
        fold,
        rows: rows.clone(),
        path: vec![Vec::with_capacity(rows.len()); grid.len()],
        separate: Vec::with_capacity(rows.len()),
        new_pooled: Vec::with_capacity(rows.len()),
        classic_pooled: Vec::with_capacity(rows.len()),
        fallback: (0..ds.classes.len()).filter(|&m| local[m].is_none()).collect(),
    };
    for &(m, i) in &rows {
        let class = &ds.classes[m];
        let x: Vec<f64> = class.x.row(i).iter().copied().collect();
        match local[m] {
            Some(t) => {
                for (l, point) in points.iter().enumerate() {
                    out.path[l].push(predict_row(layout, &point.coefficients, t, &x));
                }
                out.separate.push(predict_row(layout, &separate, t, &x));
                out.new_pooled.push(predict_row(layout, &new_pooled, t, &x));
                out.classic_pooled.push(predict_row(layout, &classic, t, &x));
            }
            None => {
                let y = fallback.predict(&class.available, &x);
                out.path.iter_mut().for_each(|p| p.push(y));
                out.separate.push(y);
                out.new_pooled.push(y);
                out.classic_pooled.push(classic_fallback.predict(&class.available, &x));
            }
        }
    }
    Ok(out)
}

/// Error summary of one class in one fold (or over all folds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: usize,
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
}

/// Per-class scores plus macro (equal class weight) and micro (equal
/// observation weight) aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub classes: Vec<ClassScore>,
    pub macro_mae: f64,
    pub micro_mae: f64,
    pub macro_mse: f64,
}

/// Scores `predictions` against the responses of `rows`; classes without
/// rows are left out.
pub fn score(ds: &Dataset, rows: &[(usize, usize)], predictions: &[f64]) -> Scores {
    let mut abs = vec![0.0; ds.classes.len()];
    let mut sq = vec![0.0; ds.classes.len()];
    let mut count = vec![0usize; ds.classes.len()];
    for (&(m, i), p) in rows.iter().zip(predictions) {
        let e = ds.classes[m].y[i] - p;
        abs[m] += e.abs();
        sq[m] += e * e;
        count[m] += 1;
    }
    let classes: Vec<ClassScore> = (0..ds.classes.len())
        .filter(|&m| count[m] > 0)
        .map(|m| ClassScore { class: m, n: count[m], mae: abs[m] / count[m] as f64, mse: sq[m] / count[m] as f64 })
        .collect();
    let k = classes.len() as f64;
    Scores {
        macro_mae: classes.iter().map(|c| c.mae).sum::<f64>() / k,
        micro_mae: abs.iter().sum::<f64>() / rows.len() as f64,
        macro_mse: classes.iter().map(|c| c.mse).sum::<f64>() / k,
        classes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
    /// `per_fold[k][l]`: scores of fold `k` at grid value `l`.
    pub per_fold: Vec<Vec<Scores>>,
    /// Fold-averaged macro MAE per grid value; the selection criterion.
    pub mae: Vec<f64>,
    pub micro_mae: Vec<f64>,
    pub mse: Vec<f64>,
    pub selected: usize,
    pub selected_lambda: f64,
    /// Out-of-fold scores per grid value, pooled over folds.
    pub overall: Vec<Scores>,
    /// Classes predicted from the pooled fallback, as `(fold, class)`.
    pub fallback: Vec<(usize, usize)>,
}

/// Out-of-fold predictions for every observation, indexed `[class][row]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfFold {
    /// `path[l][m][i]`.
    pub path: Vec<Vec<Vec<f64>>>,
    pub separate: Vec<Vec<f64>>,
    pub new_pooled: Vec<Vec<f64>>,
    pub classic_pooled: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub report: CvReport,
    pub predictions: OutOfFold,
}

/// Combines fold outcomes (in any order) into the report.
pub fn aggregate(ds: &Dataset, folds: &Folds, grid: &[f64], mut outcomes: Vec<FoldOutcome>) -> CrossValidation {
    outcomes.sort_by_key(|o| o.fold);
    let shape: Vec<Vec<f64>> = ds.classes.iter().map(|c| vec![f64::NAN; c.n()]).collect();
    let mut oof = OutOfFold {
        path: vec![shape.clone(); grid.len()],
        separate: shape.clone(),
        new_pooled: shape.clone(),
        classic_pooled: shape,
    };
    let mut per_fold = Vec::with_capacity(outcomes.len());
    let mut fallback = Vec::new();
    for o in &outcomes {
        per_fold.push(o.path.iter().map(|p| score(ds, &o.rows, p)).collect::<Vec<_>>());
        fallback.extend(o.fallback.iter().map(|&m| (o.fold, m)));
        for (t, &(m, i)) in o.rows.iter().enumerate() {
            for (l, p) in o.path.iter().enumerate() {
                oof.path[l][m][i] = p[t];
            }
            oof.separate[m][i] = o.separate[t];
            oof.new_pooled[m][i] = o.new_pooled[t];
            oof.classic_pooled[m][i] = o.classic_pooled[t];
        }
    }
    let k = per_fold.len() as f64;
    let mean_over_folds = |f: &dyn Fn(&Scores) -> f64| -> Vec<f64> {
        (0..grid.len()).map(|l| per_fold.iter().map(|s| f(&s[l])).sum::<f64>() / k).collect()
    };
    let mae = mean_over_folds(&|s| s.macro_mae);
    let micro_mae = mean_over_folds(&|s| s.micro_mae);
    let mse = mean_over_folds(&|s| s.macro_mse);
    let selected = argmin_last(&mae);

    let all_rows: Vec<(usize, usize)> =
        ds.classes.iter().enumerate().flat_map(|(m, c)| (0..c.n()).map(move |i| (m, i))).collect();
    let overall = oof
        .path
        .iter()
        .map(|p| {
            let flat: Vec<f64> = all_rows.iter().map(|&(m, i)| p[m][i]).collect();
            score(ds, &all_rows, &flat)
        })
        .collect();

    let report = CvReport {
        k: folds.k,
        seed: folds.seed,
        grid: grid.to_vec(),
        per_fold,
        mae,
        micro_mae,
        mse,
        selected,
        selected_lambda: grid[selected],
        overall,
        fallback,
    };
    CrossValidation { report, predictions: oof }
}

/// Sequential K-fold cross-validation on the grid of the full-data path.
pub fn cv_select(ds: &Dataset, d: &CouplingMatrix, cfg: &FitConfig, k: usize, seed: u64) -> Result<CrossValidation> {
    let lambda_max = PathSolver::new(ds, d, *cfg)?.lambda_max();
    cv_on_grid(ds, &make_grid(lambda_max, cfg), cfg, k, seed)
}

/// Sequential K-fold cross-validation over a fixed grid.
pub fn cv_on_grid(ds: &Dataset, grid: &[f64], cfg: &FitConfig, k: usize, seed: u64) -> Result<CrossValidation> {
    let folds = make_folds(ds, k, seed)?;
    let outcomes = (0..k).map(|f| fit_fold(ds, &folds, f, grid, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(aggregate(ds, &folds, grid, outcomes))
}
