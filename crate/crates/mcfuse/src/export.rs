//! CSV and JSON artifacts. Floats in CSV files carry 17 significant digits;
//! JSON numbers use the shortest representation that reads back exactly.

use std::fs;
use std::path::Path;

use mcfuse_core::selection::CrossValidation;
use mcfuse_core::solver::to_raw_scale;
use mcfuse_core::summary::{DescriptiveReport, MissingnessMatrix};
use mcfuse_core::{
    AicCurve, CoefficientLayout, Coefficients, FusionPair, MethodComparison, PathResult, StandardizationStats,
};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::pipeline::Prepared;

/// Version tag carried by every JSON document and API response.
pub const SCHEMA_VERSION: &str = "mcfuse/1";

pub const INTERCEPT: &str = "(intercept)";

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => AppError::Data(format!("{}: {other:?}", path.display())),
    })?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))?;
    Ok(())
}

/// Pretty JSON with a trailing newline; files and API bodies share it.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, json_bytes(value)?).map_err(|e| AppError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub predictor: String,
    pub standardized: f64,
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub id: String,
    pub n: usize,
    pub intercept: f64,
    pub intercept_raw: f64,
    /// Available predictors only; absent ones have no coefficient.
    pub slopes: Vec<SlopeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorGroups {
    pub predictor: String,
    /// Class ids sharing one coefficient value.
    pub groups: Vec<Vec<String>>,
}

/// Fitted model at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub schema: String,
    pub grid_index: usize,
    pub lambda: f64,
    pub lambda_max: f64,
    pub df: usize,
    pub rss: f64,
    pub penalty: f64,
    pub objective: f64,
    pub certified: bool,
    pub predictors: Vec<String>,
    pub stats: StandardizationStats,
    pub layout: CoefficientLayout,
    pub coefficients: Coefficients,
    pub coefficients_raw: Coefficients,
    pub classes: Vec<ClassModel>,
    pub partition: Vec<PredictorGroups>,
}

pub fn model_export(prep: &Prepared, path: &PathResult, index: usize) -> ModelExport {
    let point = &path.points[index];
    let ds = &prep.dataset;
    let raw = to_raw_scale(&path.layout, &point.coefficients, &prep.stats);
    let classes = ds
        .classes
        .iter()
        .enumerate()
        .map(|(m, c)| ClassModel {
            id: c.id.clone(),
            n: c.n(),
            intercept: point.coefficients.intercepts[m],
            intercept_raw: raw.intercepts[m],
            slopes: c
                .available
                .iter()
                .map(|&j| {
                    let col = path.layout.col(m, j).unwrap_or_default();
                    SlopeEntry {
                        predictor: ds.predictors[j].clone(),
                        standardized: point.coefficients.slopes[col],
                        raw: raw.slopes[col],
                    }
                })
                .collect(),
        })
        .collect();
    let partition = point
        .partition
        .iter()
        .enumerate()
        .map(|(j, groups)| PredictorGroups {
            predictor: ds.predictors[j].clone(),
            groups: groups.iter().map(|g| g.iter().map(|&m| ds.classes[m].id.clone()).collect()).collect(),
        })
        .collect();
    ModelExport {
        schema: SCHEMA_VERSION.into(),
        grid_index: index,
        lambda: point.lambda,
        lambda_max: path.lambda_max,
        df: point.df,
        rss: point.rss,
        penalty: point.penalty,
        objective: point.objective,
        certified: point.diagnostics.certified,
        predictors: ds.predictors.clone(),
        stats: prep.stats.clone(),
        layout: path.layout.clone(),
        coefficients: point.coefficients.clone(),
        coefficients_raw: raw,
        classes,
        partition,
    }
}

/// Long format: one row per (λ, class, coefficient), intercept first.
pub fn write_path_csv(path_file: &Path, prep: &Prepared, path: &PathResult) -> Result<()> {
    let mut rows = Vec::new();
    for index in 0..path.points.len() {
        let model = model_export(prep, path, index);
        let tail = [num(model.lambda)];
        let stats = [model.df.to_string(), num(model.rss), num(model.penalty)];
        for class in &model.classes {
            let mut push = |name: &str, s: f64, r: f64| {
                let mut row = tail.to_vec();
                row.extend([class.id.clone(), name.to_string(), num(s), num(r)]);
                row.extend(stats.iter().cloned());
                rows.push(row);
            };
            push(INTERCEPT, class.intercept, class.intercept_raw);
            for s in &class.slopes {
                push(&s.predictor, s.standardized, s.raw);
            }
        }
    }
    write_csv(
        path_file,
        &["lambda", "class", "predictor", "coefficient_standardized", "coefficient_raw", "df", "rss", "penalty"],
        rows,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridExport {
    pub schema: String,
    pub lambda_max: f64,
    pub grid: Vec<f64>,
    pub df: Vec<usize>,
    pub rss: Vec<f64>,
    pub penalty: Vec<f64>,
    pub iterations: Vec<usize>,
    pub certified: Vec<bool>,
}

pub fn grid_export(path: &PathResult) -> GridExport {
    GridExport {
        schema: SCHEMA_VERSION.into(),
        lambda_max: path.lambda_max,
        grid: path.grid.clone(),
        df: path.points.iter().map(|p| p.df).collect(),
        rss: path.points.iter().map(|p| p.rss).collect(),
        penalty: path.points.iter().map(|p| p.penalty).collect(),
        iterations: path.points.iter().map(|p| p.diagnostics.iterations).collect(),
        certified: path.points.iter().map(|p| p.diagnostics.certified).collect(),
    }
}

pub fn write_pairs_csv(file: &Path, prep: &Prepared, pairs: &[FusionPair]) -> Result<()> {
    let ds = &prep.dataset;
    let rows = pairs.iter().enumerate().map(|(r, p)| {
        vec![
            r.to_string(),
            ds.predictors[p.predictor].clone(),
            ds.classes[p.a].id.clone(),
            ds.classes[p.b].id.clone(),
            num(p.raw_weight),
            num(p.weight),
        ]
    });
    write_csv(file, &["row", "predictor", "class_a", "class_b", "raw_weight", "weight"], rows)
}

pub fn write_triplets_csv(file: &Path, prep: &Prepared) -> Result<()> {
    let rows = prep.d.triplets().into_iter().map(|(r, c, v)| vec![r.to_string(), c.to_string(), num(v)]);
    write_csv(file, &["row", "col", "value"], rows)
}

pub fn write_summary(out: &Path, report: &DescriptiveReport, missing: &MissingnessMatrix) -> Result<()> {
    let rows = report
        .entries
        .iter()
        .map(|e| vec![e.variable.clone(), e.group.clone(), e.statistic.clone(), num(e.value)]);
    write_csv(&out.join("summary_stats.csv"), &["variable", "group", "statistic", "value"], rows)?;
    let rows = report.class_sizes.iter().map(|(c, n)| vec![c.clone(), n.to_string()]);
    write_csv(&out.join("class_sizes.csv"), &["class", "n"], rows)?;
    let mut header = vec!["class"];
    header.extend(missing.variables.iter().map(String::as_str));
    let rows = missing.class.iter().zip(&missing.missing).map(|(c, flags)| {
        let mut row = vec![c.clone()];
        row.extend(flags.iter().map(|f| f.to_string()));
        row
    });
    write_csv(&out.join("missingness.csv"), &header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub index: usize,
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackEntry {
    pub fold: usize,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub schema: String,
    pub k: usize,
    pub seed: u64,
    pub lambda_max: f64,
    /// Minimum of the fold-averaged macro MAE.
    pub cv: Choice,
    pub aic: Choice,
    pub fallback: Vec<FallbackEntry>,
}

pub fn selection_summary(prep: &Prepared, path: &PathResult, cv: &CrossValidation, aic: &AicCurve) -> SelectionSummary {
    let r = &cv.report;
    SelectionSummary {
        schema: SCHEMA_VERSION.into(),
        k: r.k,
        seed: r.seed,
        lambda_max: path.lambda_max,
        cv: Choice { index: r.selected, lambda: r.selected_lambda, value: r.mae[r.selected] },
        aic: Choice { index: aic.selected, lambda: aic.lambda[aic.selected], value: aic.aic[aic.selected] },
        fallback: r
            .fallback
            .iter()
            .map(|(fold, m)| FallbackEntry { fold: *fold, class: prep.dataset.classes[*m].id.clone() })
            .collect(),
    }
}

pub fn write_cv(out: &Path, prep: &Prepared, path: &PathResult, cv: &CrossValidation, aic: &AicCurve) -> Result<()> {
    let r = &cv.report;
    let ids = prep.class_ids();
    let mut rows = Vec::new();
    for (l, lambda) in r.grid.iter().enumerate() {
        for (k, fold) in r.per_fold.iter().enumerate() {
            for c in &fold[l].classes {
                rows.push(vec![num(*lambda), k.to_string(), ids[c.class].clone(), num(c.mae), num(c.mse)]);
            }
        }
    }
    write_csv(&out.join("cv_folds.csv"), &["lambda", "fold", "class", "mae", "mse"], rows)?;
    let rows = (0..r.grid.len()).map(|l| vec![num(r.grid[l]), num(r.mae[l]), num(r.micro_mae[l]), num(r.mse[l])]);
    write_csv(&out.join("cv_curve.csv"), &["lambda", "mae", "micro_mae", "mse"], rows)?;
    let rows = (0..aic.lambda.len())
        .map(|l| vec![num(aic.lambda[l]), num(aic.aic[l]), aic.df[l].to_string(), num(aic.sigma2[l])]);
    write_csv(&out.join("aic.csv"), &["lambda", "aic", "df", "sigma2"], rows)?;
    write_json(&out.join("selection.json"), &selection_summary(prep, path, cv, aic))?;
    write_json(&out.join("model_cv.json"), &model_export(prep, path, r.selected))?;
    write_json(&out.join("model_aic.json"), &model_export(prep, path, aic.selected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationExport {
    pub schema: String,
    pub selected_lambda: f64,
    pub comparison: MethodComparison,
}

/// Per-class MAE table (one column per method) plus the JSON with
/// confusion matrices and accuracies.
pub fn write_evaluation(out: &Path, selected_lambda: f64, cmp: &MethodComparison) -> Result<()> {
    let mut header = vec!["class", "n"];
    header.extend(cmp.methods.iter().map(String::as_str));
    let first = &cmp.reports[0];
    let mut rows: Vec<Vec<String>> = first
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = vec![c.class.clone(), c.n.to_string()];
            row.extend(cmp.reports.iter().map(|r| num(r.classes[i].mae)));
            row
        })
        .collect();
    let total: usize = first.classes.iter().map(|c| c.n).sum();
    for (label, pick) in [("(macro)", 0), ("(micro)", 1)] {
        let mut row = vec![label.to_string(), total.to_string()];
        row.extend(cmp.reports.iter().map(|r| num(if pick == 0 { r.macro_mae } else { r.micro_mae })));
        rows.push(row);
    }
    write_csv(&out.join("evaluation.csv"), &header, rows)?;
    let export = EvaluationExport { schema: SCHEMA_VERSION.into(), selected_lambda, comparison: cmp.clone() };
    write_json(&out.join("evaluation.json"), &export)
}
