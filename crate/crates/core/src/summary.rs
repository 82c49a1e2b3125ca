//! Descriptive statistics of the raw input, per class and overall.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{mean_sd, RawColumn, RawTable};

/// Group label for statistics over all rows.
pub const ALL_GROUP: &str = "(all)";

/// One statistic of one variable in one group, in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub variable: String,
    pub group: String,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveReport {
    pub entries: Vec<SummaryEntry>,
    /// Rows per class, largest first.
    pub class_sizes: Vec<(String, usize)>,
}

/// Per-observation missingness flags, one column per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessMatrix {
    pub variables: Vec<String>,
    pub class: Vec<String>,
    pub missing: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn numeric_stats(values: &[f64]) -> Option<NumericStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let (mean, sd) = mean_sd(&sorted);
    Some(NumericStats { n, mean, sd, median, min: sorted[0], max: sorted[n - 1] })
}

struct Collector<'a> {
    entries: &'a mut Vec<SummaryEntry>,
    variable: &'a str,
    group: &'a str,
}

impl Collector<'_> {
    fn push(&mut self, statistic: impl Into<String>, value: f64) {
        self.entries.push(SummaryEntry {
            variable: self.variable.to_string(),
            group: self.group.to_string(),
            statistic: statistic.into(),
            value,
        });
    }

    fn numeric(&mut self, cells: &[Option<f64>]) {
        let present: Vec<f64> = cells.iter().flatten().copied().collect();
        self.push("n", present.len() as f64);
        if let Some(s) = numeric_stats(&present) {
            self.push("mean", s.mean);
            self.push("sd", s.sd);
            self.push("median", s.median);
            self.push("min", s.min);
            self.push("max", s.max);
        }
        self.missing(cells.len(), cells.len() - present.len());
    }

    fn categorical(&mut self, levels: &[String], codes: &[Option<usize>]) {
        let total = codes.len();
        for (k, level) in levels.iter().enumerate() {
            let count = codes.iter().filter(|c| **c == Some(k)).count();
            self.push(format!("level:{level}"), count as f64);
            self.push(format!("level_percent:{level}"), percent(count, total));
        }
        self.missing(total, codes.iter().filter(|c| c.is_none()).count());
    }

    fn missing(&mut self, total: usize, missing: usize) {
        self.push("missing", missing as f64);
        self.push("missing_percent", percent(missing, total));
    }
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Mean (SD), median [min, max] and missing count/percent for the response
/// and every numeric column; level counts for categorical columns. Groups are
/// the classes in identifier order followed by [`ALL_GROUP`].
pub fn summarize(table: &RawTable) -> DescriptiveReport {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for c in &table.declared_classes {
        groups.entry(c.as_str()).or_default();
    }
    for (row, c) in table.class.iter().enumerate() {
        groups.entry(c.as_str()).or_default().push(row);
    }
    let mut group_rows: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    for (g, rows) in &group_rows {
        if rows.is_empty() {
            log::warn!("class `{g}` has no rows");
        }
    }
    let mut class_sizes: Vec<(String, usize)> = group_rows.iter().map(|(g, r)| (g.to_string(), r.len())).collect();
    class_sizes.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    group_rows.push((ALL_GROUP, (0..table.n_rows()).collect()));

    let mut entries = Vec::new();
    for (group, rows) in &group_rows {
        let pick = |v: &[Option<f64>]| -> Vec<Option<f64>> { rows.iter().map(|&r| v[r]).collect() };
        Collector { entries: &mut entries, variable: "response", group }.numeric(&pick(&table.response));
        for (name, col) in &table.columns {
            let mut c = Collector { entries: &mut entries, variable: name, group };
            match col {
                RawColumn::Numeric(v) => c.numeric(&pick(v)),
                RawColumn::Categorical { levels, codes, .. } => {
                    let sub: Vec<Option<usize>> = rows.iter().map(|&r| codes[r]).collect();
                    c.categorical(levels, &sub);
                }
            }
        }
    }
    DescriptiveReport { entries, class_sizes }
}

/// Row-per-observation missingness of the response and every column.
pub fn missingness_matrix(table: &RawTable) -> MissingnessMatrix {
    let mut variables = Vec::with_capacity(table.columns.len() + 1);
    variables.push("response".to_string());
    variables.extend(table.columns.iter().map(|(n, _)| n.clone()));
    let missing = (0..table.n_rows())
        .map(|r| {
            let mut row = Vec::with_capacity(variables.len());
            row.push(table.response[r].is_none());
            row.extend(table.columns.iter().map(|(_, c)| c.is_missing(r)));
            row
        })
        .collect();
    MissingnessMatrix { variables, class: table.class.clone(), missing }
}
