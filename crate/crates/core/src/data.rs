//! Dataset representation: raw table, per-class grouping, the class-level
//! missingness mask and global standardization.
//!
//! The pipeline is `RawTable::group` → [`apply_missingness_mask`] →
//! [`standardize`]. The resulting [`Dataset`] is immutable and shared by every
//! downstream fit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One input column before class grouping.
#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<Option<f64>>),
    /// `codes[i]` indexes `levels`; `reference` is the level without an indicator.
    Categorical { levels: Vec<String>, reference: usize, codes: Vec<Option<usize>> },
}

impl RawColumn {
    pub fn len(&self) -> usize {
        match self {
            RawColumn::Numeric(v) => v.len(),
            RawColumn::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            RawColumn::Numeric(v) => v[row].is_none(),
            RawColumn::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    /// Names and values of the model columns this column expands to.
    fn expand(&self, name: &str) -> Vec<(String, Vec<Option<f64>>)> {
        match self {
            RawColumn::Numeric(v) => vec![(name.to_string(), v.clone())],
            RawColumn::Categorical { levels, reference, codes } => levels
                .iter()
                .enumerate()
                .filter(|(k, _)| k != reference)
                .map(|(k, level)| {
                    let col = codes.iter().map(|c| c.map(|c| if c == k { 1.0 } else { 0.0 })).collect();
                    (format!("{name}={level}"), col)
                })
                .collect(),
        }
    }
}

/// Row-oriented input: one class label and optional response per row, plus
/// predictor columns in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTable {
    pub class: Vec<String>,
    pub response: Vec<Option<f64>>,
    pub columns: Vec<(String, RawColumn)>,
    /// Classes that must be present even if they have no rows.
    pub declared_classes: Vec<String>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.class.len()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.class.len();
        if self.response.len() != n {
            return Err(Error::ColumnLength { column: "response".into(), got: self.response.len(), expected: n });
        }
        for (name, col) in &self.columns {
            if col.len() != n {
                return Err(Error::ColumnLength { column: name.clone(), got: col.len(), expected: n });
            }
            if let RawColumn::Numeric(v) = col {
                if let Some(row) = v.iter().position(|x| matches!(x, Some(x) if !x.is_finite())) {
                    return Err(Error::NonFinite { column: name.clone(), row });
                }
            }
        }
        Ok(())
    }

    /// Splits rows by class, expands categorical columns into indicator
    /// columns and drops rows whose response is missing.
    ///
    /// Classes are ordered by identifier. `response_range` bounds the
    /// response values that are accepted.
    pub fn group(&self, response_range: Option<(f64, f64)>) -> Result<GroupedData> {
        self.check_shape()?;
        let mut predictors = Vec::new();
        let mut values: Vec<Vec<Option<f64>>> = Vec::new();
        for (name, col) in &self.columns {
            for (n, v) in col.expand(name) {
                predictors.push(n);
                values.push(v);
            }
        }

        let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for c in &self.declared_classes {
            by_class.entry(c.as_str()).or_default();
        }
        if !self.declared_classes.is_empty() {
            if let Some(c) = self.class.iter().find(|c| !self.declared_classes.contains(c)) {
                return Err(Error::UnknownClass(c.clone()));
            }
        }
        let mut dropped = 0;
        for (row, (class, resp)) in self.class.iter().zip(&self.response).enumerate() {
            match resp {
                None => dropped += 1,
                Some(y) => {
                    if !y.is_finite() {
                        return Err(Error::NonFinite { column: "response".into(), row });
                    }
                    if let Some((lo, hi)) = response_range {
                        if *y < lo || *y > hi {
                            return Err(Error::ResponseOutOfRange { row, value: *y, lo, hi });
                        }
                    }
                    by_class.entry(class.as_str()).or_default().push(row);
                }
            }
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} rows with missing response");
        }

        let p = predictors.len();
        let mut classes = Vec::with_capacity(by_class.len());
        for (id, rows) in by_class {
            if rows.is_empty() {
                return Err(Error::EmptyClass(id.to_string()));
            }
            let response = rows.iter().map(|&r| self.response[r].unwrap_or_default()).collect();
            let cells = rows.iter().map(|&r| values.iter().map(|col| col[r]).collect()).collect();
            classes.push(RawClass {
                id: id.to_string(),
                rows,
                response,
                cells,
                available: vec![true; p],
                masked: Vec::new(),
            });
        }
        Ok(GroupedData { predictors, classes, dropped_missing_response: dropped })
    }
}

/// Observations of one class, with per-cell missingness still present.
#[derive(Debug, Clone, PartialEq)]
pub struct RawClass {
    pub id: String,
    /// Source row index of each observation.
    pub rows: Vec<usize>,
    pub response: Vec<f64>,
    /// `cells[i][j]`: predictor `j` of observation `i`.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Membership of each predictor in the class's available set.
    pub available: Vec<bool>,
    /// Predictors removed from the available set by masking.
    pub masked: Vec<usize>,
}

impl RawClass {
    pub fn n(&self) -> usize {
        self.response.len()
    }

    fn has_missing(&self, j: usize) -> bool {
        self.cells.iter().any(|row| row[j].is_none())
    }

    fn all_missing(&self, j: usize) -> bool {
        self.cells.iter().all(|row| row[j].is_none())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    pub predictors: Vec<String>,
    pub classes: Vec<RawClass>,
    pub dropped_missing_response: usize,
}

/// How per-cell missingness turns into predictor availability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskPolicy {
    /// A predictor with any missing cell in a class is unavailable for that class.
    #[default]
    Class,
    /// Keep predictors with at least one observed cell; rows with missing cells
    /// are deleted during standardization.
    Listwise,
}

impl GroupedData {
    pub fn mask(&self, policy: MaskPolicy) -> GroupedData {
        let mut out = self.clone();
        for class in &mut out.classes {
            for j in 0..out.predictors.len() {
                if !class.available[j] {
                    continue;
                }
                let drop = match policy {
                    MaskPolicy::Class => class.has_missing(j),
                    MaskPolicy::Listwise => class.all_missing(j),
                };
                if drop {
                    class.available[j] = false;
                    class.masked.push(j);
                }
            }
            if !class.available.iter().any(|a| *a) {
                log::warn!("class `{}` has no available predictors; fitting intercept only", class.id);
            }
        }
        out
    }
}

/// Removes from each class every predictor with a missing cell in that class.
/// Rows are never dropped.
pub fn apply_missingness_mask(data: &GroupedData) -> GroupedData {
    data.mask(MaskPolicy::Class)
}

/// Global per-predictor centering and scaling constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub predictors: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardizationStats {
    pub fn to_standard(&self, j: usize, raw: f64) -> f64 {
        (raw - self.mean[j]) / self.scale[j]
    }

    pub fn to_raw(&self, j: usize, standardized: f64) -> f64 {
        standardized * self.scale[j] + self.mean[j]
    }
}

/// Standardized design of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDesign {
    pub id: String,
    /// Available predictor indices (into [`Dataset::predictors`]), ascending.
    pub available: Vec<usize>,
    /// `n × p_m` standardized predictors, columns in `available` order.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl ClassDesign {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.available.len()
    }

    /// Design with a leading constant column.
    pub fn design_with_intercept(&self) -> DMatrix<f64> {
        let mut d = DMatrix::from_element(self.n(), self.p() + 1, 1.0);
        d.view_mut((0, 1), (self.n(), self.p())).copy_from(&self.x);
        d
    }

    pub fn has(&self, predictor: usize) -> bool {
        self.available.binary_search(&predictor).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub predictors: Vec<String>,
    pub classes: Vec<ClassDesign>,
    /// Rows removed by listwise deletion during standardization.
    pub listwise_dropped: usize,
}

impl Dataset {
    pub fn n_total(&self) -> usize {
        self.classes.iter().map(ClassDesign::n).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(ClassDesign::n).collect()
    }

    pub fn class_index(&self, id: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.id == id)
    }

    /// Classes that carry predictor `j`.
    pub fn carriers(&self, j: usize) -> Vec<usize> {
        (0..self.classes.len()).filter(|&m| self.classes[m].has(j)).collect()
    }

    /// Keeps the rows flagged in `keep[m]`. Classes left without rows are
    /// dropped; the returned map gives the original index of each kept class.
    pub fn subset(&self, keep: &[Vec<bool>]) -> (Dataset, Vec<usize>) {
        let mut classes = Vec::new();
        let mut map = Vec::new();
        for (m, class) in self.classes.iter().enumerate() {
            let rows: Vec<usize> = (0..class.n()).filter(|&i| keep[m][i]).collect();
            if rows.is_empty() {
                continue;
            }
            let x = class.x.select_rows(rows.iter());
            let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| class.y[i]));
            classes.push(ClassDesign { id: class.id.clone(), available: class.available.clone(), x, y });
            map.push(m);
        }
        (Dataset { predictors: self.predictors.clone(), classes, listwise_dropped: 0 }, map)
    }
}

/// Standardizes every retained predictor to pooled mean 0 and sample
/// standard deviation 1, pooling over the classes where it is available.
///
/// Rows that still have a missing cell in an available predictor (only
/// possible under [`MaskPolicy::Listwise`]) are deleted first. Predictors
/// available in no class are dropped.
pub fn standardize(data: &GroupedData) -> Result<(Dataset, StandardizationStats)> {
    let p = data.predictors.len();

    let mut kept_rows = Vec::with_capacity(data.classes.len());
    let mut listwise_dropped = 0;
    for class in &data.classes {
        let rows: Vec<usize> = (0..class.n())
            .filter(|&i| (0..p).all(|j| !class.available[j] || class.cells[i][j].is_some()))
            .collect();
        listwise_dropped += class.n() - rows.len();
        if rows.is_empty() {
            return Err(Error::EmptyClass(class.id.clone()));
        }
        kept_rows.push(rows);
    }
    if listwise_dropped > 0 {
        log::warn!("listwise deletion removed {listwise_dropped} rows");
    }

    let mut retained = Vec::new();
    let mut mean = Vec::new();
    let mut scale = Vec::new();
    for j in 0..p {
        let vals: Vec<f64> = data
            .classes
            .iter()
            .zip(&kept_rows)
            .filter(|(c, _)| c.available[j])
            .flat_map(|(c, rows)| rows.iter().map(move |&i| c.cells[i][j].unwrap_or_default()))
            .collect();
        if vals.is_empty() {
            log::warn!("predictor `{}` is unavailable in every class; dropped", data.predictors[j]);
            continue;
        }
        let (mu, sd) = mean_sd(&vals);
        let magnitude = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(sd > 1e-14 * magnitude) || !sd.is_finite() {
            return Err(Error::ZeroVariance(data.predictors[j].clone()));
        }
        retained.push(j);
        mean.push(mu);
        scale.push(sd);
    }

    let mut classes = Vec::with_capacity(data.classes.len());
    for (class, rows) in data.classes.iter().zip(&kept_rows) {
        let available: Vec<usize> = (0..retained.len()).filter(|&k| class.available[retained[k]]).collect();
        let x = DMatrix::from_fn(rows.len(), available.len(), |i, c| {
            let k = available[c];
            let raw = class.cells[rows[i]][retained[k]].unwrap_or_default();
            (raw - mean[k]) / scale[k]
        });
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| class.response[i]));
        classes.push(ClassDesign { id: class.id.clone(), available, x, y });
    }

    let predictors: Vec<String> = retained.iter().map(|&j| data.predictors[j].clone()).collect();
    let stats = StandardizationStats { predictors: predictors.clone(), mean, scale };
    Ok((Dataset { predictors, classes, listwise_dropped }, stats))
}

/// Mean and sample (n − 1) standard deviation; SD is 0 for fewer than two values.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1.0)))
}
