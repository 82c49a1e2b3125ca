#![allow(dead_code)]

use mcfuse_core::data::{apply_missingness_mask, standardize, RawColumn, RawTable};
use mcfuse_core::{CouplingMatrix, Dataset, StandardizationStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct Spec {
    pub sizes: Vec<usize>,
    pub slopes: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    /// `available[m][j]`; unavailable predictors get one missing cell.
    pub available: Vec<Vec<bool>>,
    pub noise: f64,
}

pub fn class_name(m: usize) -> String {
    format!("C{m:02}")
}

pub fn simulate_table(spec: &Spec, rng: &mut ChaCha8Rng) -> RawTable {
    let p = spec.slopes[0].len();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut class = Vec::new();
    let mut response = Vec::new();
    let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); p];
    for (m, &n) in spec.sizes.iter().enumerate() {
        for i in 0..n {
            let x: Vec<f64> = (0..p).map(|j| 10.0 * j as f64 + (1.0 + j as f64) * normal.sample(rng)).collect();
            let y = spec.intercepts[m]
                + x.iter().zip(&spec.slopes[m]).map(|(a, b)| a * b).sum::<f64>()
                + spec.noise * normal.sample(rng);
            class.push(class_name(m));
            response.push(Some(y));
            for j in 0..p {
                let missing = !spec.available[m][j] && i == n / 2;
                cols[j].push(if missing { None } else { Some(x[j]) });
            }
        }
    }
    RawTable {
        class,
        response,
        columns: cols.into_iter().enumerate().map(|(j, c)| (format!("x{j}"), RawColumn::Numeric(c))).collect(),
        declared_classes: Vec::new(),
    }
}

pub fn prepare(table: &RawTable) -> (Dataset, StandardizationStats, CouplingMatrix) {
    let g = apply_missingness_mask(&table.group(None).unwrap());
    let (ds, stats) = standardize(&g).unwrap();
    let d = CouplingMatrix::from_dataset(&ds).unwrap();
    (ds, stats, d)
}

/// Random instance: M ∈ {2,3,4}, p ≤ 3, n_m ∈ [5, 30], random availability
/// (every predictor kept in at least two classes).
pub fn random_instance(seed: u64) -> (Dataset, StandardizationStats, CouplingMatrix) {
    prepare(&random_table(seed))
}

pub fn random_table(seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=4);
    let p = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..m).map(|_| rng.gen_range(5..=30)).collect();
    let base: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let slopes = (0..m).map(|_| base.iter().map(|b| b + rng.gen_range(-1.0..1.0)).collect()).collect();
    let intercepts = (0..m).map(|_| rng.gen_range(30.0..60.0)).collect();
    let mut available = vec![vec![true; p]; m];
    for j in 0..p {
        for row in available.iter_mut() {
            if rng.gen_bool(0.25) {
                row[j] = false;
            }
        }
        let kept = available.iter().filter(|a| a[j]).count();
        if kept < 2 {
            available[0][j] = true;
            available[1][j] = true;
        }
    }
    let spec = Spec { sizes, slopes, intercepts, available, noise: rng.gen_range(1.0..6.0) };
    simulate_table(&spec, &mut rng)
}
