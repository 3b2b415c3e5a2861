use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use skewlearn::bench::{
    emit_reports, generate_synthetic_table, run_benchmark, BenchmarkConfig, GridSet, Stage,
    SyntheticSpec, SYNTHETIC_TARGET,
};
use skewlearn::data::{encode, fit_schema_with, Dataset, FeatureSchema, RawTable, SchemaOptions};
use skewlearn::metrics::{full_report, MetricsReport};
use skewlearn::model::{LearnerConfig, LearnerKind, SavedModel};
use skewlearn::resample::SmoteConfig;
use skewlearn::selection::{
    grid_search, leakage_demo, HyperGrid, LeakageConfig, PipelineSpec, ResampleScope, Resampler,
    Scoring, SearchOptions, Weighting,
};
use skewlearn::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(
    name = "skewlearn",
    version,
    about = "Imbalanced binary classification toolkit"
)]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic imbalanced table as CSV.
    Synth(SynthArgs),
    /// Fit and save a feature schema; print a column summary.
    Ingest(IngestArgs),
    /// Train one learner on a CSV and save it with its schema.
    Train(TrainArgs),
    /// Score a saved model on a labelled CSV.
    Evaluate(EvaluateArgs),
    /// Cross-validated search over a JSON grid.
    Gridsearch(GridsearchArgs),
    /// Run the three-stage benchmark and write reports.
    Benchmark(BenchmarkArgs),
    /// Compare split-then-resample with resample-then-split.
    LeakageDemo(LeakageArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV (header row, empty cell = missing).
    #[arg(long)]
    data: PathBuf,
    /// Binary target column.
    #[arg(long, default_value = SYNTHETIC_TARGET)]
    target: String,
    /// Treat these columns as categorical even if they look numeric.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 0.135)]
    pos_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    signal: f64,
    #[arg(long, default_value_t = 6)]
    numeric: usize,
    #[arg(long, default_value_t = 4)]
    categorical: usize,
    #[arg(long, default_value_t = 5)]
    categories: usize,
    #[arg(long, default_value_t = 0.05)]
    missing: f64,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = SYNTHETIC_TARGET)]
    target: String,
    #[arg(long)]
    schema_out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    model: String,
    /// Learner hyperparameters as JSON; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oversample the minority class with SMOTE before fitting.
    #[arg(long)]
    smote: bool,
    /// Class weighting: none or balanced.
    #[arg(long, default_value = "none")]
    class_weight: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output file; `.csv` gives the metrics row, anything else JSON.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct GridsearchArgs {
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Overrides the grid's "model" entry.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value = "f1")]
    scoring: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value = "fold")]
    resample_scope: String,
    /// Resample training folds with SMOTE.
    #[arg(long)]
    smote: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for cv_results.csv and cv_summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "1,2,3")]
    stages: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// paper, reduced, or a directory of <model>_<smote|weighted>.json files.
    #[arg(long, default_value = "paper")]
    grids: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value = "f1")]
    scoring: String,
    #[arg(long, default_value = "fold")]
    resample_scope: String,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Comma-separated subset of lr,dt,rf,gbt,mlp.
    #[arg(long, default_value = "lr,dt,rf,gbt,mlp")]
    models: String,
    /// Also run the MLP in stage 1.
    #[arg(long)]
    include_dl_baseline: bool,
}

#[derive(Args)]
struct LeakageArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "dt")]
    model: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Skip SMOTE; both arms then coincide.
    #[arg(long)]
    no_resample: bool,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load(args: &DataArgs) -> Result<(RawTable, FeatureSchema, Dataset)> {
    let table = RawTable::read_csv(&args.data)?;
    let options = SchemaOptions {
        categorical: args.categorical.clone(),
        ..Default::default()
    };
    let schema = fit_schema_with(&table, &args.target, &options)?;
    let data = encode(&table, &schema)?;
    Ok((table, schema, data))
}

/// Reads a learner config file; the `"model"` tag is optional but must match.
fn learner_config(kind: LearnerKind, path: Option<&Path>) -> Result<LearnerConfig> {
    let Some(path) = path else {
        return Ok(kind.default_config());
    };
    let mut v: serde_json::Value = serde_json::from_str(&read_text(path)?)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::InvalidParameter("config must be a JSON object".into()))?;
    match obj.get("model").and_then(|m| m.as_str()) {
        Some(code) if code != kind.code() => {
            return Err(Error::InvalidParameter(format!(
                "config is for model {code}, but --model is {}",
                kind.code()
            )))
        }
        _ => {
            obj.insert("model".into(), kind.code().into());
        }
    }
    serde_json::from_value(v).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
}

fn weighting(s: &str) -> Result<Weighting> {
    match s {
        "none" => Ok(Weighting::None),
        "balanced" => Ok(Weighting::Balanced),
        _ => Err(Error::InvalidParameter(format!(
            "class weight must be none or balanced, got '{s}'"
        ))),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_rows: a.rows,
        positive_fraction: a.pos_frac,
        n_numeric: a.numeric,
        n_categorical: a.categorical,
        n_categories: a.categories,
        signal_strength: a.signal,
        missing_fraction: a.missing,
        seed: a.seed,
    };
    generate_synthetic_table(&spec)?.write_csv(&a.out)?;
    log::info!("wrote {} rows to {}", a.rows, a.out.display());
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let table = RawTable::read_csv(&a.input)?;
    let options = SchemaOptions {
        categorical: a.categorical,
        ..Default::default()
    };
    let schema = fit_schema_with(&table, &a.target, &options)?;
    schema.save(&a.schema_out)?;
    println!(
        "{:<24} {:>8} {:>12} {:>12}",
        "column", "dtype", "num_missing", "num_uniques"
    );
    for s in table.summarize() {
        println!(
            "{:<24} {:>8} {:>12} {:>12}",
            s.name, s.dtype, s.num_missing, s.num_uniques
        );
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let kind = LearnerKind::parse(&a.model)?;
    let config = learner_config(kind, a.config.as_deref())?;
    let (_, schema, data) = load(&a.data)?;
    let mut pipeline =
        PipelineSpec::new(config.clone()).with_weighting(weighting(&a.class_weight)?);
    if a.smote {
        pipeline = pipeline.with_resampler(Resampler::Smote(SmoteConfig::default()));
    }
    for w in pipeline.warnings() {
        log::warn!("{w}");
    }
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let fitted = pipeline.fit(data.features(), data.labels(), &rows, a.seed)?;
    SavedModel::new(
        Some(schema),
        data.feature_names().to_vec(),
        config,
        fitted.model,
    )
    .save(&a.out)?;
    log::info!(
        "trained {} on {} rows ({} synthetic)",
        kind.code(),
        fitted.n_training_rows,
        fitted.n_synthetic
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let saved = SavedModel::load(&a.model)?;
    let schema = saved
        .schema
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("model file carries no schema".into()))?;
    let table = RawTable::read_csv(&a.data)?;
    let data = encode(&table, schema)?;
    let scores = saved.model.predict_proba(data.features())?;
    let eval = full_report(data.labels(), &scores, a.threshold)?;
    let is_csv = a
        .report
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let text = if is_csv {
        let cm = eval.confusion;
        format!(
            "{},threshold,tp,fp,fn,tn\n{},{},{},{},{},{}\n",
            MetricsReport::CSV_HEADER.join(","),
            eval.metrics.csv_values().map(|v| v.to_string()).join(","),
            eval.threshold,
            cm.tp,
            cm.fp,
            cm.fn_,
            cm.tn
        )
    } else {
        serde_json::to_string_pretty(&json!({
            "model": saved.model.kind().code(),
            "n_rows": data.n_rows(),
            "prevalence": data.prevalence(),
            "evaluation": eval,
        }))?
    };
    write_text(&a.report, &text)
}

fn gridsearch(a: GridsearchArgs) -> Result<()> {
    let model = a.model.as_deref().map(LearnerKind::parse).transpose()?;
    let grid = HyperGrid::from_json(&read_text(&a.grid)?, model)?;
    let (_, _, data) = load(&a.data)?;
    let mut template = PipelineSpec::new(grid.model.default_config());
    if a.smote {
        template = template.with_resampler(Resampler::Smote(SmoteConfig::default()));
    }
    let options = SearchOptions {
        k: a.folds,
        scoring: Scoring::parse(&a.scoring)?,
        seed: a.seed,
        scope: ResampleScope::parse(&a.resample_scope)?,
        skip_failed: false,
    };
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let cv = grid_search(&data, &rows, &template, &grid, &options)?;
    write_text(&a.out.join("cv_results.csv"), &cv.to_csv()?)?;
    write_text(
        &a.out.join("cv_summary.json"),
        &serde_json::to_string_pretty(&cv.summary_json())?,
    )?;
    println!(
        "best {} = {:.6} with {}",
        cv.scoring.name(),
        cv.best_score(),
        serde_json::to_string(cv.best_params())?
    );
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let table = RawTable::read_csv(&a.data.data)?;
    if !a.data.categorical.is_empty() {
        return Err(Error::InvalidParameter(
            "--categorical is not supported by benchmark".into(),
        ));
    }
    let config = BenchmarkConfig {
        target: a.data.target,
        stages: Stage::parse_list(&a.stages)?,
        learners: a
            .models
            .split(',')
            .map(|m| LearnerKind::parse(m.trim()))
            .collect::<Result<_>>()?,
        seed: a.seed,
        test_fraction: a.test_fraction,
        folds: a.folds,
        scoring: Scoring::parse(&a.scoring)?,
        resample_scope: ResampleScope::parse(&a.resample_scope)?,
        grids: GridSet::parse(&a.grids),
        include_dl_baseline: a.include_dl_baseline,
        ..Default::default()
    };
    let report = run_benchmark(&table, &config)?;
    emit_reports(&report, &a.out)?;
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    println!(
        "{} cells, {} failed; reports in {}",
        report.cells.len(),
        failed,
        a.out.display()
    );
    Ok(())
}

fn leakage(a: LeakageArgs) -> Result<()> {
    let kind = LearnerKind::parse(&a.model)?;
    let learner = learner_config(kind, a.config.as_deref())?;
    let (_, _, data) = load(&a.data)?;
    let config = LeakageConfig {
        learner,
        resampler: if a.no_resample {
            Resampler::None
        } else {
            Resampler::Smote(SmoteConfig::default())
        },
        test_fraction: a.test_fraction,
        seed: a.seed,
        ..Default::default()
    };
    let report = leakage_demo(&data, &config)?;
    write_text(&a.out, &serde_json::to_string_pretty(&report)?)?;
    println!(
        "F1 correct {:.4} leaky {:.4}; recall correct {:.4} leaky {:.4}",
        report.correct.metrics.f1,
        report.leaky.metrics.f1,
        report.correct.metrics.recall,
        report.leaky.metrics.recall
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Training => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Benchmark(a) => benchmark(a),
        Command::LeakageDemo(a) => leakage(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
