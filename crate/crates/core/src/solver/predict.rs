use alloc::vec::Vec;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, StandardizationStats};
use crate::error::{Error, Result};
use crate::fusion::CoefficientLayout;

use super::Coefficients;

/// A new observation on the raw predictor scale. `values` is indexed like
/// [`Dataset::predictors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub class: usize,
    pub values: Vec<Option<f64>>,
}

/// Prediction for one standardized row of class `class` (values in the
/// class's available-predictor order).
pub fn predict_row(layout: &CoefficientLayout, coefficients: &Coefficients, class: usize, row: &[f64]) -> f64 {
    let slopes = &coefficients.slopes[layout.class_range(class)];
    coefficients.intercepts[class] + slopes.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}

/// Fitted values of every class on its own (standardized) design.
pub fn fitted_values(ds: &Dataset, coefficients: &Coefficients) -> Vec<DVector<f64>> {
    let layout = CoefficientLayout::from_dataset(ds);
    ds.classes
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let b = DVector::from_column_slice(&coefficients.slopes[layout.class_range(m)]);
            (&c.x * b).add_scalar(coefficients.intercepts[m])
        })
        .collect()
}

/// Standardizes raw observations with `stats` and applies the class model.
pub fn predict(
    ds: &Dataset,
    coefficients: &Coefficients,
    stats: &StandardizationStats,
    observations: &[RawObservation],
) -> Result<Vec<f64>> {
    let layout = CoefficientLayout::from_dataset(ds);
    observations
        .iter()
        .map(|obs| {
            let class = ds.classes.get(obs.class).ok_or_else(|| Error::UnknownClass(alloc::format!("#{}", obs.class)))?;
            let row = class
                .available
                .iter()
                .map(|&j| {
                    obs.values.get(j).copied().flatten().map(|v| stats.to_standard(j, v)).ok_or_else(|| {
                        Error::MissingPredictor { class: class.id.clone(), predictor: ds.predictors[j].clone() }
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(predict_row(&layout, coefficients, obs.class, &row))
        })
        .collect()
}

/// Coefficients on the raw predictor scale: slope `β/scale`, intercept
/// `β₀ − Σ β·mean/scale`.
pub fn to_raw_scale(layout: &CoefficientLayout, coefficients: &Coefficients, stats: &StandardizationStats) -> Coefficients {
    let mut slopes = coefficients.slopes.clone();
    let mut intercepts = coefficients.intercepts.clone();
    for (col, m, j) in layout.entries() {
        slopes[col] = coefficients.slopes[col] / stats.scale[j];
        intercepts[m] -= coefficients.slopes[col] * stats.mean[j] / stats.scale[j];
    }
    Coefficients { slopes, intercepts }
}
