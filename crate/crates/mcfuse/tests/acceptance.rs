//! Acceptance suite. Runs without the test harness so that every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.
//!
//!     cargo test -p mcfuse --test acceptance

use std::fs;
use std::path::Path;
use std::time::Instant;

use mcfuse::cli::{self, Command, CvArgs, FoldArgs, GridArgs, Input, PathArgs};
use mcfuse::synth::{random_scenario, schema_toml, write_table, Scenario};
use mcfuse_core::data::{MaskPolicy, RawColumn, RawTable};
use mcfuse_core::solver::{objective, predict, RawObservation};
use mcfuse_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag}  {name:<34} {} ({:.2}s)", o.detail, start.elapsed().as_secs_f64());
    o.pass
}

fn prepare(table: &RawTable) -> (Dataset, StandardizationStats, CouplingMatrix) {
    let grouped = table.group(None).unwrap().mask(MaskPolicy::Class);
    let (ds, stats) = standardize(&grouped).unwrap();
    let d = CouplingMatrix::from_dataset(&ds).unwrap();
    (ds, stats, d)
}

fn instance(seed: u64) -> (Dataset, StandardizationStats, CouplingMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = random_scenario(&mut rng);
    prepare(&scenario.sample(&mut rng))
}

fn max_diff(a: &Coefficients, b: &Coefficients) -> f64 {
    a.slopes
        .iter()
        .zip(&b.slopes)
        .chain(a.intercepts.iter().zip(&b.intercepts))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

const INSTANCES: u64 = 20;

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (mut worst_coef, mut worst_gap) = (0.0f64, 0.0f64);
    for seed in 0..INSTANCES {
        let (ds, _, d) = instance(seed);
        let lmax = lambda_max(&ds, &d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        for _ in 0..5 {
            let lambda = lmax * rng.gen_range(0.01..0.99);
            let fit = solve_at(&ds, &d, lambda, None, &FitConfig::default()).unwrap();
            let oracle = qp_oracle(&ds, &d, lambda).unwrap();
            worst_coef = worst_coef.max(max_diff(&fit.coefficients, &oracle.coefficients));
            worst_gap = worst_gap.max((objective(&ds, &d, &fit.coefficients, lambda) - oracle.objective).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst_coef <= 1e-4 && worst_gap <= 1e-6 && secs < 60.0,
        detail: format!("max coef diff {worst_coef:.2e} (<= 1e-4), max objective gap {worst_gap:.2e} (<= 1e-6)"),
    }
}

fn endpoint_identities() -> Outcome {
    let (mut sep, mut pooled) = (0.0f64, 0.0f64);
    for seed in 0..INSTANCES {
        let (ds, _, d) = instance(seed);
        let path = solve_path(&ds, &d, &FitConfig::default()).unwrap();
        sep = sep.max(max_diff(&path.points[0].coefficients, &fit_separate(&ds).unwrap().coefficients));
        let last = &path.points.last().unwrap().coefficients;
        pooled = pooled.max(max_diff(last, &fit_new_pooled(&ds).unwrap().coefficients));
    }
    Outcome {
        pass: sep <= 1e-6 && pooled <= 1e-6,
        detail: format!("lambda=0 vs separate {sep:.2e}, lambda_max vs new pooled {pooled:.2e} (<= 1e-6)"),
    }
}

/// For two classes and one predictor the pooled solution is optimal iff
/// λw ≥ |x̃₁ᵀ(ỹ₁ − x̃₁b̄)|, with per-class centering and b̄ the pooled slope.
fn analytic_threshold() -> Outcome {
    let scenario = Scenario {
        classes: vec!["A".into(), "B".into()],
        sizes: vec![25, 12],
        slopes: vec![vec![1.0], vec![2.5]],
        intercepts: vec![10.0, 20.0],
        available: vec![vec![true], vec![true]],
        noise: 1.0,
    };
    let (ds, _, d) = prepare(&scenario.sample(&mut ChaCha8Rng::seed_from_u64(42)));
    let centered = |v: Vec<f64>| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - mean).collect::<Vec<f64>>()
    };
    let x: Vec<Vec<f64>> = ds.classes.iter().map(|c| centered(c.x.column(0).iter().copied().collect())).collect();
    let y: Vec<Vec<f64>> = ds.classes.iter().map(|c| centered(c.y.iter().copied().collect())).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let b = (dot(&x[0], &y[0]) + dot(&x[1], &y[1])) / (dot(&x[0], &x[0]) + dot(&x[1], &x[1]));
    let resid: Vec<f64> = y[0].iter().zip(&x[0]).map(|(yi, xi)| yi - xi * b).collect();
    let expected = dot(&x[0], &resid).abs() / d.rows[0].pair.weight;
    let got = lambda_max(&ds, &d).unwrap();
    let rel = ((got - expected) / expected).abs();
    Outcome { pass: rel < 0.01, detail: format!("measured {got:.6}, closed form {expected:.6}, rel diff {rel:.2e} (< 1%)") }
}

fn path_structure() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..INSTANCES {
        let (ds, _, d) = instance(seed);
        let path = solve_path(&ds, &d, &FitConfig::default()).unwrap();
        let monotone =
            path.points.windows(2).all(|w| w[1].rss >= w[0].rss - 1e-8 && w[1].penalty <= w[0].penalty + 1e-8);
        let free: usize = ds.classes.iter().map(|c| c.p() + 1).sum();
        let last = path.points.last().unwrap();
        // Fully pooled: one group per predictor that some class carries.
        let groups = (0..ds.predictors.len()).filter(|&j| ds.classes.iter().any(|c| c.has(j))).count();
        let fused = last.partition.iter().all(|g| g.len() <= 1);
        if !monotone || path.points[0].df != free || last.df != groups + ds.classes.len() || !fused {
            failures.push(seed);
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{} of {INSTANCES} instances monotone with expected df; failing seeds {failures:?}", INSTANCES as usize - failures.len()),
    }
}

fn benchmark() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut gains = Vec::new();
    for seed in 0..10u64 {
        let scenario = Scenario::benchmark();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (ds, stats, d) = prepare(&scenario.sample(&mut rng));
        let cfg = FitConfig::default();
        let path = solve_path(&ds, &d, &cfg).unwrap();
        let cv = cv_on_grid(&ds, &path.grid, &cfg, 5, seed).unwrap();

        let test = scenario.test_set(300).sample(&mut rng);
        let obs: Vec<RawObservation> = (0..test.n_rows())
            .map(|i| RawObservation {
                class: ds.class_index(&test.class[i]).unwrap(),
                values: test
                    .columns
                    .iter()
                    .map(|(_, c)| match c {
                        RawColumn::Numeric(v) => v[i],
                        RawColumn::Categorical { .. } => None,
                    })
                    .collect(),
            })
            .collect();
        let macro_mae = |c: &Coefficients| {
            let p = predict(&ds, c, &stats, &obs).unwrap();
            let mut sum = [0.0; 3];
            for (i, o) in obs.iter().enumerate() {
                sum[o.class] += (p[i] - test.response[i].unwrap()).abs() / 300.0;
            }
            sum.iter().sum::<f64>() / 3.0
        };
        let selected = macro_mae(&path.points[cv.report.selected].coefficients);
        let separate = macro_mae(&fit_separate(&ds).unwrap().coefficients);
        let classic = macro_mae(&fit_classic_pooled(&ds).unwrap().coefficients);
        if selected < separate && selected < classic {
            wins += 1;
        }
        gains.push(100.0 * (separate - selected) / separate);
    }
    let secs = start.elapsed().as_secs_f64();
    let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    Outcome {
        pass: wins >= 8 && secs < 300.0,
        detail: format!("CV-selected beats both baselines in {wins}/10 seeds (>= 8); mean gain over separate {mean_gain:.1}%"),
    }
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    for _ in 0..1000 {
        let mut cm = ConfusionMatrix::default();
        for r in 0..4 {
            for c in 0..4 {
                cm.counts[r][c] = rng.gen_range(0..50);
            }
        }
        cm.counts[0][0] += 1;
        let total = cm.total();
        let (acc, ca) = (cm.accuracy(), cm.consumer_accuracy());
        let lower: u64 = (0..4).flat_map(|r| (0..r).map(move |c| (r, c))).map(|(r, c)| cm.counts[r][c]).sum();
        let diag: u64 = (0..4).map(|k| cm.counts[k][k]).sum();
        let exact = cm.lower_triangle() == lower && cm.diagonal() == diag && ca == (diag + lower) as f64 / total as f64;
        let ratio = ((ca - acc) - lower as f64 / total as f64).abs() <= 4.0 * f64::EPSILON;
        if !(ca >= acc && exact && ratio) {
            bad += 1;
        }
    }
    let mut partition_bad = 0;
    for _ in 0..1000 {
        let mut t: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..99.99)).collect();
        t.sort_by(f64::total_cmp);
        if t[0] == t[1] || t[1] == t[2] {
            continue;
        }
        let th = StarThresholds::new(t[0], t[1], t[2]).unwrap();
        let s: f64 = rng.gen_range(-1e3..1e3);
        let expected = if s < t[0] {
            Star::Two
        } else if s < t[1] {
            Star::Three
        } else if s < t[2] {
            Star::Four
        } else {
            Star::Five
        };
        let at_boundaries = [t[0], t[1], t[2]].iter().map(|&b| th.to_stars(b)).collect::<Vec<_>>();
        if th.to_stars(s) != expected || at_boundaries != [Star::Three, Star::Four, Star::Five] {
            partition_bad += 1;
        }
    }
    Outcome {
        pass: bad == 0 && partition_bad == 0,
        detail: format!("1000 matrices, {bad} violations; star partition, {partition_bad} violations"),
    }
}

fn brute_trimmed_mean(scores: &[f64]) -> f64 {
    let mut left = scores.to_vec();
    for _ in 0..2 {
        let hi = (0..left.len()).max_by(|&a, &b| left[a].total_cmp(&left[b])).unwrap();
        left.remove(hi);
        let lo = (0..left.len()).min_by(|&a, &b| left[a].total_cmp(&left[b])).unwrap();
        left.remove(lo);
    }
    left.iter().sum::<f64>() / left.len() as f64
}

fn mq4_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let panel = |rng: &mut ChaCha8Rng| (0..10).map(|_| rng.gen_range(0.0..=100.0)).collect::<Vec<f64>>();
    let mut worst = 0.0f64;
    let mut not_monotone = 0;
    for i in 0..1000 {
        let r = PanelRecord {
            tenderness: panel(&mut rng),
            juiciness: panel(&mut rng),
            flavour: panel(&mut rng),
            overall: panel(&mut rng),
        };
        let expected = 0.3 * brute_trimmed_mean(&r.tenderness)
            + 0.1 * brute_trimmed_mean(&r.juiciness)
            + 0.3 * brute_trimmed_mean(&r.flavour)
            + 0.3 * brute_trimmed_mean(&r.overall);
        let got = mq4(&r).unwrap();
        worst = worst.max((got - expected).abs());
        if i % 5 == 0 {
            let mut up = r.clone();
            let k = rng.gen_range(0..10);
            up.flavour[k] = (up.flavour[k] + rng.gen_range(0.0..30.0)).min(100.0);
            if mq4(&up).unwrap() < got - 1e-12 {
                not_monotone += 1;
            }
        }
    }
    Outcome {
        pass: worst <= 1e-12 && not_monotone == 0,
        detail: format!("1000 records, max error {worst:.2e} (<= 1e-12); {not_monotone} monotonicity violations"),
    }
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = Scenario::benchmark();
    let table = scenario.sample(&mut ChaCha8Rng::seed_from_u64(3));
    let data = tmp.path().join("data.csv");
    let schema = tmp.path().join("schema.toml");
    write_table(&data, &table).unwrap();
    fs::write(&schema, schema_toml(&table)).unwrap();
    let input = || Input { data: data.clone(), schema: schema.clone() };
    let grid = || GridArgs { grid_size: 30, lambda_min_ratio: 1e-4 };
    let mut runs = Vec::new();
    for r in 0..2 {
        let out = tmp.path().join(format!("run{r}"));
        cli::execute(Command::Path(PathArgs { input: input(), grid: grid(), out: out.clone() })).unwrap();
        cli::execute(Command::Cv(CvArgs { input: input(), grid: grid(), folds: FoldArgs { k: 5, seed: 9 }, out: out.clone() }))
            .unwrap();
        runs.push(files_in(&out));
    }
    let n = runs[0].len();
    Outcome { pass: n >= 10 && runs[0] == runs[1], detail: format!("{n} files from path and cv compared byte for byte") }
}

fn main() {
    let results = [
        check("oracle equivalence", oracle_equivalence),
        check("endpoint identities", endpoint_identities),
        check("analytic pooling threshold", analytic_threshold),
        check("path structure", path_structure),
        check("shared-slope benchmark", benchmark),
        check("metric identities", metric_identities),
        check("MQ4 trimmed mean", mq4_oracle),
        check("determinism", determinism),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
