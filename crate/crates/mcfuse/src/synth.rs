//! Simulated grouped data for demos and tests.

use std::path::Path;

use mcfuse_core::data::{RawColumn, RawTable};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{AppError, Result};
use crate::export::num;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub classes: Vec<String>,
    pub sizes: Vec<usize>,
    /// `slopes[m][j]` on the raw predictor scale.
    pub slopes: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    /// `available[m][j]`; an unavailable predictor is left blank in every row
    /// of that class.
    pub available: Vec<Vec<bool>>,
    pub noise: f64,
}

impl Scenario {
    /// Three classes of 100, 10 and 10 rows with common slopes
    /// `[1.5, -2, 0.8, 1]` and intercepts 50, 40, 60. The last predictor is
    /// not recorded for the third class, whose true slope on it is 0.
    pub fn benchmark() -> Scenario {
        let mut slopes = vec![vec![1.5, -2.0, 0.8, 1.0]; 3];
        slopes[2][3] = 0.0;
        let mut available = vec![vec![true; 4]; 3];
        available[2][3] = false;
        Scenario {
            classes: vec!["A".into(), "B".into(), "C".into()],
            sizes: vec![100, 10, 10],
            slopes,
            intercepts: vec![50.0, 40.0, 60.0],
            available,
            noise: 5.0,
        }
    }

    pub fn n_predictors(&self) -> usize {
        self.slopes[0].len()
    }

    pub fn predictor_names(&self) -> Vec<String> {
        (0..self.n_predictors()).map(|j| format!("x{}", j + 1)).collect()
    }

    /// Same scenario with `n` rows in every class and every predictor
    /// recorded, for held-out evaluation.
    pub fn test_set(&self, n: usize) -> Scenario {
        Scenario {
            sizes: vec![n; self.classes.len()],
            available: vec![vec![true; self.n_predictors()]; self.classes.len()],
            ..self.clone()
        }
    }

    /// Predictor `j` is drawn from N(10j, (1 + j)²); noise is Gaussian.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> RawTable {
        let p = self.n_predictors();
        let std_normal = Normal::new(0.0, 1.0).unwrap_or_else(|_| unreachable!());
        let mut table = RawTable::default();
        let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); p];
        for (m, &n) in self.sizes.iter().enumerate() {
            for _ in 0..n {
                let x: Vec<f64> = (0..p).map(|j| 10.0 * j as f64 + (1.0 + j as f64) * std_normal.sample(rng)).collect();
                let mean = self.intercepts[m] + x.iter().zip(&self.slopes[m]).map(|(a, b)| a * b).sum::<f64>();
                table.class.push(self.classes[m].clone());
                table.response.push(Some(mean + self.noise * std_normal.sample(rng)));
                for j in 0..p {
                    cols[j].push(self.available[m][j].then_some(x[j]));
                }
            }
        }
        table.columns = self.predictor_names().into_iter().zip(cols).map(|(n, c)| (n, RawColumn::Numeric(c))).collect();
        table
    }
}

/// Random scenario: 2 to 4 classes, 1 to 3 predictors, 5 to 30 rows per
/// class. Each predictor stays available in at least two classes.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let m = rng.gen_range(2..=4);
    let p = rng.gen_range(1..=3);
    let base: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut available = vec![vec![true; p]; m];
    for j in 0..p {
        for row in available.iter_mut() {
            row[j] = !rng.gen_bool(0.25);
        }
        let mut kept = available.iter().filter(|a| a[j]).count();
        for row in available.iter_mut() {
            if kept >= 2 {
                break;
            }
            if !row[j] {
                row[j] = true;
                kept += 1;
            }
        }
    }
    Scenario {
        classes: (0..m).map(|k| format!("G{}", k + 1)).collect(),
        sizes: (0..m).map(|_| rng.gen_range(5..=30)).collect(),
        slopes: (0..m).map(|_| base.iter().map(|b| b + rng.gen_range(-1.0..1.0)).collect()).collect(),
        intercepts: (0..m).map(|_| rng.gen_range(30.0..60.0)).collect(),
        available,
        noise: rng.gen_range(1.0..5.0),
    }
}

/// Writes `table` as CSV with columns `class, score, <predictors>`.
pub fn write_table(path: &Path, table: &RawTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
    let mut header = vec!["class".to_string(), "score".to_string()];
    header.extend(table.columns.iter().map(|(n, _)| n.clone()));
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map(num).unwrap_or_default();
    for i in 0..table.n_rows() {
        let mut row = vec![table.class[i].clone(), cell(table.response[i])];
        for (_, c) in &table.columns {
            row.push(match c {
                RawColumn::Numeric(v) => cell(v[i]),
                RawColumn::Categorical { levels, codes, .. } => codes[i].map(|k| levels[k].clone()).unwrap_or_default(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Schema matching [`write_table`]. Simulated scores are not bounded, so the
/// accepted response range is the observed one widened to whole numbers.
pub fn schema_toml(table: &RawTable) -> String {
    let quoted: Vec<String> = table.columns.iter().map(|(n, _)| format!("\"{n}\"")).collect();
    let observed = table.response.iter().flatten();
    let lo = observed.clone().fold(f64::INFINITY, |a, &b| a.min(b)).floor();
    let hi = observed.fold(f64::NEG_INFINITY, |a, &b| a.max(b)).ceil();
    format!(
        "class = \"class\"\nresponse = \"score\"\nnumeric = [{}]\nmask = \"class\"\nresponse_range = [{lo:?}, {hi:?}]\n",
        quoted.join(", ")
    )
}
