use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcfuse_core::summary::{missingness_matrix, summarize};
use mcfuse_core::{FitConfig, MethodComparison, StarThresholds};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AppError, Result};
use crate::export;
use crate::pipeline::Prepared;
use crate::schema::Schema;
use crate::server;
use crate::synth::{self, Scenario};

#[derive(Debug, Parser)]
#[command(name = "mcfuse", version, about = "Grouped regression with fused slopes across classes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive statistics, class sizes and missingness.
    Summarize(SummarizeArgs),
    /// Fit the regularization path.
    Path(PathArgs),
    /// Cross-validation and AIC over the path.
    Cv(CvArgs),
    /// Star-rating evaluation of out-of-fold predictions.
    Evaluate(EvaluateArgs),
    /// Local HTTP service for the path explorer.
    Serve(ServeArgs),
    /// Write a simulated data set and matching schema.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of positive grid values; λ = 0 is always added.
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda_min_ratio: f64,
}

impl GridArgs {
    pub fn config(&self) -> FitConfig {
        FitConfig { grid_size: self.grid_size, lambda_min_ratio: self.lambda_min_ratio, ..FitConfig::default() }
    }
}

#[derive(Debug, Args)]
pub struct FoldArgs {
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub folds: FoldArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub folds: FoldArgs,
    /// Star thresholds `t3,t4,t5`; overrides the schema.
    #[arg(long, value_parser = parse_thresholds)]
    pub thresholds: Option<[f64; 3]>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub folds: FoldArgs,
    /// Directory for models saved through the API.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioKind {
    Benchmark,
    Random,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ScenarioKind::Benchmark)]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Summarize(a) => cmd_summarize(&a),
        Command::Path(a) => cmd_path(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Serve(a) => cmd_serve(a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| AppError::io(out, e))
}

pub fn cmd_summarize(a: &SummarizeArgs) -> Result<()> {
    let schema = Schema::load(&a.input.schema)?;
    let table = crate::ingest::read_table(&a.input.data, &schema)?;
    out_dir(&a.out)?;
    export::write_summary(&a.out, &summarize(&table), &missingness_matrix(&table))?;
    log::info!("summary of {} rows written to {}", table.n_rows(), a.out.display());
    Ok(())
}

pub fn cmd_path(a: &PathArgs) -> Result<()> {
    let cfg = a.grid.config();
    cfg.validate()?;
    let prep = Prepared::load(&a.input.data, &a.input.schema)?;
    let path = prep.path(&cfg)?;
    out_dir(&a.out)?;
    export::write_path_csv(&a.out.join("path.csv"), &prep, &path)?;
    export::write_json(&a.out.join("grid.json"), &export::grid_export(&path))?;
    let pairs: Vec<_> = prep.d.rows.iter().map(|r| r.pair).collect();
    export::write_pairs_csv(&a.out.join("pairs.csv"), &prep, &pairs)?;
    export::write_triplets_csv(&a.out.join("d_triplets.csv"), &prep)?;
    log::info!("lambda_max = {:e}; {} grid points written to {}", path.lambda_max, path.grid.len(), a.out.display());
    Ok(())
}

pub fn cmd_cv(a: &CvArgs) -> Result<()> {
    let cfg = a.grid.config();
    cfg.validate()?;
    let prep = Prepared::load(&a.input.data, &a.input.schema)?;
    let path = prep.path(&cfg)?;
    let cv = prep.cross_validate(&path, &cfg, a.folds.k, a.folds.seed)?;
    let aic = prep.aic(&path);
    out_dir(&a.out)?;
    export::write_cv(&a.out, &prep, &path, &cv, &aic)?;
    log::info!(
        "CV selects lambda = {:e}, AIC selects lambda = {:e}",
        cv.report.selected_lambda,
        aic.lambda[aic.selected]
    );
    Ok(())
}

fn parse_thresholds(s: &str) -> std::result::Result<[f64; 3], String> {
    let values = s.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
    match values.as_deref() {
        Ok(&[a, b, c]) => Ok([a, b, c]),
        _ => Err(format!("expected three comma-separated numbers, got `{s}`")),
    }
}

fn thresholds(cli: &Option<[f64; 3]>, schema: &Schema) -> Result<StarThresholds> {
    match cli {
        Some(t) => Ok(StarThresholds::new(t[0], t[1], t[2])?),
        None => schema
            .thresholds()?
            .ok_or_else(|| AppError::Usage("star thresholds are required: pass --thresholds or set them in the schema".into())),
    }
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let cfg = a.grid.config();
    cfg.validate()?;
    let prep = Prepared::load(&a.input.data, &a.input.schema)?;
    let th = thresholds(&a.thresholds, &prep.schema)?;
    let path = prep.path(&cfg)?;
    let cv = prep.cross_validate(&path, &cfg, a.folds.k, a.folds.seed)?;
    let ds = &prep.dataset;
    let truths: Vec<f64> = ds.classes.iter().flat_map(|c| c.y.iter().copied()).collect();
    let classes: Vec<usize> = ds.classes.iter().enumerate().flat_map(|(m, c)| std::iter::repeat_n(m, c.n())).collect();
    let flat = |p: &Vec<Vec<f64>>| p.concat();
    let oof = &cv.predictions;
    let selected = flat(&oof.path[cv.report.selected]);
    let new_pooled = flat(&oof.new_pooled);
    let classic = flat(&oof.classic_pooled);
    let separate = flat(&oof.separate);
    let methods: [(&str, &[f64]); 4] = [
        ("cv_selected", &selected),
        ("new_pooled", &new_pooled),
        ("classic_pooled", &classic),
        ("separate", &separate),
    ];
    let cmp = MethodComparison::new(&methods, &truths, &classes, &prep.class_ids(), &th)?;
    out_dir(&a.out)?;
    export::write_evaluation(&a.out, cv.report.selected_lambda, &cmp)?;
    log::info!("evaluation written to {}", a.out.display());
    Ok(())
}

pub fn cmd_serve(a: ServeArgs) -> Result<()> {
    let cfg = a.grid.config();
    cfg.validate()?;
    let prep = Prepared::load(&a.input.data, &a.input.schema)?;
    out_dir(&a.out)?;
    let state = server::AppState::new(prep, &cfg, a.folds.k, a.folds.seed, a.out)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_io()
        .build()
        .map_err(|e| AppError::Data(format!("cannot start runtime: {e}")))?;
    runtime.block_on(server::serve(state, a.port))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let scenario = match a.scenario {
        ScenarioKind::Benchmark => Scenario::benchmark(),
        ScenarioKind::Random => synth::random_scenario(&mut rng),
    };
    let table = scenario.sample(&mut rng);
    out_dir(&a.out)?;
    synth::write_table(&a.out.join("data.csv"), &table)?;
    let schema_path = a.out.join("schema.toml");
    fs::write(&schema_path, synth::schema_toml(&table)).map_err(|e| AppError::io(&schema_path, e))?;
    log::info!("{} rows written to {}", table.n_rows(), a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_thresholds_list() {
        let cli = Cli::try_parse_from([
            "mcfuse", "evaluate", "--data", "d.csv", "--schema", "s.toml", "--out", "o", "--thresholds", "40,60,80",
        ])
        .unwrap();
        let Command::Evaluate(a) = cli.command else { panic!() };
        assert_eq!(a.thresholds, Some([40.0, 60.0, 80.0]));
        assert!(parse_thresholds("1,2").is_err());
        assert_eq!(a.folds.k, 5);
        assert_eq!(a.grid.grid_size, 100);
    }

    #[test]
    fn missing_thresholds_is_usage_error() {
        let schema: Schema = toml::from_str("class = \"c\"\nresponse = \"y\"").unwrap();
        let err = thresholds(&None, &schema).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(thresholds(&Some([60.0, 40.0, 80.0]), &schema).is_err());
        assert_eq!(thresholds(&Some([40.0, 60.0, 80.0]), &schema).unwrap().t5, 80.0);
    }
}
