use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcfuse::synth::{schema_toml, write_table, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn mcfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcfuse")).args(args).output().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    data: PathBuf,
    schema: PathBuf,
}

impl Fixture {
    fn new(extra_schema: &str) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let table = Scenario::benchmark().sample(&mut ChaCha8Rng::seed_from_u64(5));
        let data = dir.path().join("data.csv");
        let schema = dir.path().join("schema.toml");
        write_table(&data, &table).unwrap();
        fs::write(&schema, schema_toml(&table) + extra_schema).unwrap();
        Fixture { dir, data, schema }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, cmd: &str, out: &Path, extra: &[&str]) -> Output {
        let mut args = vec![cmd, "--data", self.data.to_str().unwrap(), "--schema", self.schema.to_str().unwrap()];
        args.extend(["--out", out.to_str().unwrap()]);
        args.extend(extra);
        mcfuse(&args)
    }
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records().map(|rec| header.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.into(), v.into())).collect()).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn f(v: &str) -> f64 {
    v.parse().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mcfuse(&["--help"]).status.code(), Some(0));
    assert_eq!(mcfuse(&["--version"]).status.code(), Some(0));
    assert_eq!(mcfuse(&["fit"]).status.code(), Some(1));
    assert_eq!(mcfuse(&["path", "--schema", "s.toml", "--out", "o"]).status.code(), Some(1));
    let fx = Fixture::new("");
    let bad_ratio = fx.run("path", &fx.out("o"), &["--lambda-min-ratio", "2"]);
    assert_eq!(bad_ratio.status.code(), Some(1));
}

#[test]
fn missing_input_file_names_the_path() {
    let fx = Fixture::new("");
    let missing = fx.dir.path().join("nope.csv");
    let out = mcfuse(&["path", "--data", missing.to_str().unwrap(), "--schema", fx.schema.to_str().unwrap(), "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn response_outside_range_is_data_error() {
    let fx = Fixture::new("");
    let text = fs::read_to_string(&fx.schema).unwrap();
    let narrow: String =
        text.lines().map(|l| if l.starts_with("response_range") { "response_range = [0.0, 1.0]" } else { l }).collect::<Vec<_>>().join("\n");
    fs::write(&fx.schema, narrow).unwrap();
    let out = fx.run("path", &fx.out("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn path_has_one_row_per_grid_value_and_coefficient() {
    let fx = Fixture::new("");
    let out = fx.out("path");
    assert!(fx.run("path", &out, &["--grid-size", "5"]).status.success());
    let rows = read_csv(&out.join("path.csv"));
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in &rows {
        *counts.entry((r["class"].clone(), r["predictor"].clone())).or_default() += 1;
    }
    // 3 intercepts, 4 + 4 + 3 slopes.
    assert_eq!(counts.len(), 14);
    assert!(counts.values().all(|&c| c == 6));

    let grid = read_json(&out.join("grid.json"));
    let values: Vec<f64> = grid["grid"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(values.len(), 6);
    assert_eq!(values[0], 0.0);
    assert_eq!(*values.last().unwrap(), grid["lambda_max"].as_f64().unwrap());
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    let lambdas: std::collections::BTreeSet<String> = rows.iter().map(|r| r["lambda"].clone()).collect();
    assert_eq!(lambdas.len(), 6);

    let pairs = read_csv(&out.join("pairs.csv"));
    assert_eq!(pairs.len(), 3 + 3 + 3 + 1);
    let triplets = read_csv(&out.join("d_triplets.csv"));
    assert_eq!(triplets.len(), 2 * pairs.len());
}

/// Solves the normal equations of `[1 x]` by Gaussian elimination.
fn ols(xs: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = xs[0].len() + 1;
    let mut a = vec![vec![0.0; k + 1]; k];
    for (x, yi) in xs.iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
        for r in 0..k {
            for c in 0..k {
                a[r][c] += z[r] * z[c];
            }
            a[r][k] += z[r] * yi;
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    (0..k).map(|r| a[r][k] / a[r][r]).collect()
}

#[test]
fn raw_coefficients_at_zero_are_per_class_least_squares() {
    let fx = Fixture::new("");
    let out = fx.out("path");
    assert!(fx.run("path", &out, &["--grid-size", "3"]).status.success());
    let data = read_csv(&fx.data);
    let path = read_csv(&out.join("path.csv"));
    for class in ["A", "B", "C"] {
        let rows: Vec<&BTreeMap<String, String>> = data.iter().filter(|r| r["class"] == class).collect();
        let names: Vec<&str> = ["x1", "x2", "x3", "x4"].into_iter().filter(|n| !rows[0][*n].is_empty()).collect();
        let xs: Vec<Vec<f64>> = rows.iter().map(|r| names.iter().map(|n| f(&r[*n])).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| f(&r["score"])).collect();
        let expected = ols(&xs, &y);
        let at_zero: Vec<&BTreeMap<String, String>> =
            path.iter().filter(|r| r["class"] == class && f(&r["lambda"]) == 0.0).collect();
        assert_eq!(at_zero.len(), names.len() + 1);
        for (k, r) in at_zero.iter().enumerate() {
            let got = f(&r["coefficient_raw"]);
            assert!((got - expected[k]).abs() <= 1e-6 * (1.0 + expected[k].abs()), "{class} {}: {got} vs {}", r["predictor"], expected[k]);
        }
    }
}

#[test]
fn cv_outputs_are_consistent() {
    let fx = Fixture::new("");
    let out = fx.out("cv");
    assert!(fx.run("cv", &out, &["--grid-size", "20", "--k", "4", "--seed", "3"]).status.success());
    let curve = read_csv(&out.join("cv_curve.csv"));
    assert_eq!(curve.len(), 21);
    let folds = read_csv(&out.join("cv_folds.csv"));
    assert_eq!(folds.len(), 21 * 4 * 3);

    // Fold-averaged macro MAE from the per-fold rows; ties go to larger λ.
    let mut best = (f64::INFINITY, 0.0);
    for row in &curve {
        let lambda = row["lambda"].clone();
        let mut total = 0.0;
        for k in 0..4 {
            let cls: Vec<f64> =
                folds.iter().filter(|r| r["lambda"] == lambda && r["fold"] == k.to_string()).map(|r| f(&r["mae"])).collect();
            total += cls.iter().sum::<f64>() / cls.len() as f64;
        }
        let mae = total / 4.0;
        assert!((mae - f(&row["mae"])).abs() <= 1e-12 * mae.max(1.0));
        if f(&row["mae"]) <= best.0 {
            best = (f(&row["mae"]), f(&lambda));
        }
    }
    let sel = read_json(&out.join("selection.json"));
    assert_eq!(sel["cv"]["lambda"].as_f64().unwrap(), best.1);
    assert_eq!(sel["k"], 4);
    let model = read_json(&out.join("model_cv.json"));
    assert_eq!(model["lambda"].as_f64().unwrap(), best.1);
    assert_eq!(model["schema"], "mcfuse/1");

    let aic = read_csv(&out.join("aic.csv"));
    let n = 120.0;
    for row in &aic {
        let expected = f(&row["sigma2"]).ln() + 2.0 * f(&row["df"]) / n;
        assert!((f(&row["aic"]) - expected).abs() < 1e-12);
    }
}

#[test]
fn evaluate_requires_thresholds() {
    let fx = Fixture::new("");
    let out = fx.run("evaluate", &fx.out("e"), &["--grid-size", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thresholds"));
    let bad = fx.run("evaluate", &fx.out("e"), &["--thresholds", "80,60,40"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn evaluate_writes_method_table() {
    let fx = Fixture::new("thresholds = [60, 70, 80]\n");
    let out = fx.out("e");
    assert!(fx.run("evaluate", &out, &["--grid-size", "10"]).status.success());
    let rows = read_csv(&out.join("evaluation.csv"));
    assert_eq!(rows.len(), 5);
    for method in ["cv_selected", "new_pooled", "classic_pooled", "separate"] {
        let classes: Vec<f64> = rows[..3].iter().map(|r| f(&r[method])).collect();
        let macro_mae = f(&rows[3][method]);
        assert!((macro_mae - classes.iter().sum::<f64>() / 3.0).abs() < 1e-12);
        let micro = (100.0 * classes[0] + 10.0 * classes[1] + 10.0 * classes[2]) / 120.0;
        assert!((f(&rows[4][method]) - micro).abs() < 1e-12);
    }
    let json = read_json(&out.join("evaluation.json"));
    assert_eq!(json["comparison"]["reports"][0]["thresholds"]["t4"], 70.0);
    // CLI thresholds override the schema.
    assert!(fx.run("evaluate", &out, &["--grid-size", "10", "--thresholds", "50,65,90"]).status.success());
    assert_eq!(read_json(&out.join("evaluation.json"))["comparison"]["reports"][0]["thresholds"]["t5"], 90.0);
}

#[test]
fn summarize_reports_declared_empty_class() {
    let fx = Fixture::new("classes = [\"A\", \"B\", \"C\", \"D\"]\n");
    let out = fx.out("s");
    let run = fx.run("summarize", &out, &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let sizes = read_csv(&out.join("class_sizes.csv"));
    let d = sizes.iter().find(|r| r["class"] == "D").unwrap();
    assert_eq!(d["n"], "0");
    assert_eq!(sizes[0]["class"], "A");
    let missing = read_csv(&out.join("missingness.csv"));
    assert_eq!(missing.len(), 120);
    assert_eq!(missing.iter().filter(|r| r["x4"] == "true").count(), 10);
    let stats = read_csv(&out.join("summary_stats.csv"));
    let n = stats.iter().find(|r| r["variable"] == "response" && r["group"] == "(all)" && r["statistic"] == "n").unwrap();
    assert_eq!(f(&n["value"]), 120.0);
}

#[test]
fn simulate_round_trips_through_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    assert!(mcfuse(&["simulate", "--scenario", "random", "--seed", "4", "--out", out.to_str().unwrap()]).status.success());
    let data = out.join("data.csv");
    let schema = out.join("schema.toml");
    let p = dir.path().join("p");
    let run = mcfuse(&["path", "--data", data.to_str().unwrap(), "--schema", schema.to_str().unwrap(), "--out", p.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
}
