//! Star ratings, accuracy, consumer-focused accuracy and per-class error
//! tables.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundaries between 2*/3*, 3*/4* and 4*/5* on the score scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarThresholds {
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
}

impl StarThresholds {
    pub fn new(t3: f64, t4: f64, t5: f64) -> Result<Self> {
        if !(0.0 < t3 && t3 < t4 && t4 < t5 && t5 < 100.0) {
            return Err(Error::InvalidThresholds);
        }
        Ok(StarThresholds { t3, t4, t5 })
    }

    /// A score on a boundary gets the higher star.
    pub fn to_stars(&self, score: f64) -> Star {
        if score < self.t3 {
            Star::Two
        } else if score < self.t4 {
            Star::Three
        } else if score < self.t5 {
            Star::Four
        } else {
            Star::Five
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Star {
    Two,
    Three,
    Four,
    Five,
}

impl Star {
    pub const ALL: [Star; 4] = [Star::Two, Star::Three, Star::Four, Star::Five];

    /// Row/column position in a [`ConfusionMatrix`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn stars(self) -> u8 {
        self as u8 + 2
    }
}

impl From<Star> for u8 {
    fn from(s: Star) -> u8 {
        s.stars()
    }
}

impl TryFrom<u8> for Star {
    type Error = Error;

    fn try_from(v: u8) -> Result<Star> {
        match v {
            2 => Ok(Star::Two),
            3 => Ok(Star::Three),
            4 => Ok(Star::Four),
            5 => Ok(Star::Five),
            _ => Err(Error::InvalidThresholds),
        }
    }
}

/// Counts with rows = true star, columns = predicted star (2* first).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn from_scores(truth: &[f64], predicted: &[f64], thresholds: &StarThresholds) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            cm.add(thresholds.to_stars(*t), thresholds.to_stars(*p));
        }
        cm
    }

    pub fn add(&mut self, truth: Star, predicted: Star) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    /// Cells where the truth is better than the prediction.
    pub fn lower_triangle(&self) -> u64 {
        (0..4).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| self.counts[i][j]).sum()
    }

    /// Fraction on the diagonal; NaN for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        self.diagonal() as f64 / self.total() as f64
    }

    /// Fraction correct or under-predicted; NaN for an empty matrix.
    pub fn consumer_accuracy(&self) -> f64 {
        (self.diagonal() + self.lower_triangle()) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvaluation {
    pub class: String,
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub consumer_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub thresholds: StarThresholds,
    /// Classes with at least one observation, in class order.
    pub classes: Vec<ClassEvaluation>,
    pub macro_mae: f64,
    pub micro_mae: f64,
    /// Pooled over all observations.
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub consumer_accuracy: f64,
}

/// `classes[i]` indexes `class_names` for observation `i`.
pub fn per_class_report(
    predictions: &[f64],
    truths: &[f64],
    classes: &[usize],
    class_names: &[String],
    thresholds: &StarThresholds,
) -> Result<EvaluationReport> {
    if predictions.len() != truths.len() || truths.len() != classes.len() {
        return Err(Error::LengthMismatch("predictions, truths and classes must have equal length"));
    }
    let k = class_names.len();
    let mut abs = vec![0.0; k];
    let mut sq = vec![0.0; k];
    let mut count = vec![0usize; k];
    let mut confusion = vec![ConfusionMatrix::default(); k];
    for ((&p, &t), &m) in predictions.iter().zip(truths).zip(classes) {
        if m >= k {
            return Err(Error::UnknownClass(alloc::format!("#{m}")));
        }
        let e = t - p;
        abs[m] += e.abs();
        sq[m] += e * e;
        count[m] += 1;
        confusion[m].add(thresholds.to_stars(t), thresholds.to_stars(p));
    }
    let per: Vec<ClassEvaluation> = (0..k)
        .filter(|&m| count[m] > 0)
        .map(|m| ClassEvaluation {
            class: class_names[m].clone(),
            n: count[m],
            mae: abs[m] / count[m] as f64,
            mse: sq[m] / count[m] as f64,
            confusion: confusion[m],
            accuracy: confusion[m].accuracy(),
            consumer_accuracy: confusion[m].consumer_accuracy(),
        })
        .collect();
    let mut all = ConfusionMatrix::default();
    confusion.iter().for_each(|c| all.merge(c));
    Ok(EvaluationReport {
        thresholds: *thresholds,
        macro_mae: per.iter().map(|c| c.mae).sum::<f64>() / per.len() as f64,
        micro_mae: abs.iter().sum::<f64>() / truths.len() as f64,
        classes: per,
        confusion: all,
        accuracy: all.accuracy(),
        consumer_accuracy: all.consumer_accuracy(),
    })
}

/// Several methods evaluated on the same observations, one column each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub methods: Vec<String>,
    pub reports: Vec<EvaluationReport>,
}

impl MethodComparison {
    pub fn new(
        methods: &[(&str, &[f64])],
        truths: &[f64],
        classes: &[usize],
        class_names: &[String],
        thresholds: &StarThresholds,
    ) -> Result<Self> {
        let reports = methods
            .iter()
            .map(|(_, p)| per_class_report(p, truths, classes, class_names, thresholds))
            .collect::<Result<Vec<_>>>()?;
        Ok(MethodComparison { methods: methods.iter().map(|(m, _)| String::from(*m)).collect(), reports })
    }
}
