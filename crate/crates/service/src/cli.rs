//! The `dfs` command line.
//!
//! Exit codes: 0 success, 1 i/o or internal failure, 2 invalid arguments or
//! configuration (including metric/task mismatches), 3 training aborted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfs_core::amortized::{fit, StopMetric, SubsetSource, Targets, TrainConfig};
use dfs_core::cmi_estimator::{estimate_all, ColumnStore, FeatureSampler, TablePredictor};
use dfs_core::datasets::{
    generate_synthetic, load_csv, split_standardize, Dataset, LabelKind, SyntheticSpec, DEFAULT_FRACTIONS,
};
use dfs_core::evaluation::{
    frequency_csv, score_curve, selection_frequency, Metric, OracleGreedy, RandomPolicy, StaticRanked,
};
use dfs_core::observation::{Observation, Policy};
use dfs_core::oracle::{Evidence, JointTable};
use dfs_core::Error;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::ModelBundle;
use crate::http::{resolve_bind, serve};
use crate::session::SessionManager;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn failure(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

/// Argument and data problems are configuration errors; the rest are failures.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => 1,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<crate::bundle::BundleError> for CliError {
    fn from(e: crate::bundle::BundleError) -> Self {
        CliError::failure(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "dfs", version, about = "Greedy dynamic feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a policy/predictor pair and write a model bundle.
    Train(TrainArgs),
    /// Score a model (or a baseline policy) over feature budgets.
    Evaluate(EvaluateArgs),
    /// Sampling CMI estimates for every unobserved feature of a joint table.
    EstimateCmi(EstimateArgs),
    /// Exact CMI and the greedy choice for a joint table.
    Oracle(OracleArgs),
    /// Write samples from a synthetic distribution as CSV.
    Generate(GenerateArgs),
    /// Run the HTTP acquisition service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Label column of the CSV.
    #[arg(long, default_value = "y")]
    label: String,
    /// Number of classes; inferred from the labels when omitted.
    #[arg(long)]
    classes: Option<usize>,
    /// Treat the label as a real-valued target.
    #[arg(long)]
    regression: bool,
    /// Group spec file (`name: col_a, col_b` per line).
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Synthetic distribution: d2_channel, d3_switch, r1_regression, random_table(seed,d,card,K).
    #[arg(long)]
    synthetic: Option<String>,
    /// Sample count for --synthetic.
    #[arg(long, default_value_t = 50_000)]
    samples: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SourceArg {
    PolicyRollout,
    RandomUniform,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Training log (JSON lines); defaults to `<out>.log.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    temperatures: Option<Vec<f64>>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long, value_enum, default_value = "policy-rollout")]
    subset_source: SourceArg,
    #[arg(long)]
    share_backbone: bool,
    /// Validation loss watched for early stopping at each temperature.
    #[arg(long, value_enum, default_value = "relaxed")]
    early_stopping: StopArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StopArg {
    Relaxed,
    ZeroTemperature,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum PolicyArg {
    Model,
    Random,
    Static,
    OracleGreedy,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Budgets as `1,2,3` or `1-3`.
    #[arg(long, default_value = "1")]
    budgets: String,
    /// Number of seeds; seed `s` drives the rollouts and, for --synthetic, the sample.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value = "accuracy")]
    metric: String,
    #[arg(long, value_enum, default_value = "model")]
    policy: PolicyArg,
    /// Group ranking for --policy static.
    #[arg(long, value_delimiter = ',')]
    ranking: Option<Vec<usize>>,
    /// Report CSV: `seed,budget,metric,value`.
    #[arg(long)]
    out: PathBuf,
    /// Selection-frequency CSV for the first seed.
    #[arg(long)]
    frequency_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Joint table in the text format.
    #[arg(long, conflicts_with = "synthetic")]
    table: Option<PathBuf>,
    #[arg(long)]
    synthetic: Option<String>,
    /// Observed features as `i=v,j=w`.
    #[arg(long, default_value = "")]
    evidence: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplerArg {
    Oracle,
    Marginal,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, default_value_t = 128)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "oracle")]
    sampler: SamplerArg,
    /// Rows drawn from the table to back the marginal sampler.
    #[arg(long, default_value_t = 10_000)]
    marginal_rows: usize,
    /// CSV: `feature,name,estimate`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    table: TableArgs,
    /// CSV: `feature,name,cmi,greedy`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    synthetic: String,
    #[arg(long, default_value_t = 50_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the generating table in the text format.
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Bind address; the DFS_BIND environment variable takes precedence.
    #[arg(long)]
    bind: Option<String>,
    #[arg(long, default_value_t = 1800)]
    idle_timeout_secs: u64,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::EstimateCmi(a) => estimate(a),
        Command::Oracle(a) => oracle(a),
        Command::Generate(a) => generate(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))
}

/// Loads the CSV or draws the synthetic sample described by `args`.
fn load_data(args: &DataArgs, seed: u64) -> CliResult<(Dataset, Option<JointTable<f64>>)> {
    match (&args.data, &args.synthetic) {
        (Some(path), None) => {
            let kind = match (args.regression, args.classes) {
                (true, Some(_)) => return Err(CliError::config("--regression and --classes are exclusive")),
                (true, None) => LabelKind::Regression,
                (false, Some(k)) => LabelKind::Classes(k),
                (false, None) => {
                    let ds = load_csv(path, &args.label, LabelKind::Regression, args.groups.as_deref())?;
                    return Ok((infer_classes(ds)?, None));
                }
            };
            Ok((load_csv(path, &args.label, kind, args.groups.as_deref())?, None))
        }
        (None, Some(name)) => {
            let spec: SyntheticSpec = name.parse()?;
            let (ds, table) = generate_synthetic(spec, args.samples, &mut ChaCha8Rng::seed_from_u64(seed))?;
            Ok((ds, Some(table)))
        }
        _ => Err(CliError::config("give exactly one of --data or --synthetic")),
    }
}

fn infer_classes(mut ds: Dataset) -> CliResult<Dataset> {
    let Targets::Real(values) = &ds.targets else {
        return Ok(ds);
    };
    if let Some(v) = values.iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
        return Err(CliError::config(format!("label value {v} is not a class index; pass --regression")));
    }
    let classes = values.iter().fold(0.0f64, |a, &b| a.max(b)) as usize + 1;
    let labels = values.iter().map(|&v| v as usize).collect();
    ds.targets = Targets::Classes { labels, classes: classes.max(2) };
    ds.class_names = (0..classes.max(2)).map(|c| c.to_string()).collect();
    Ok(ds)
}

fn train(a: TrainArgs) -> CliResult {
    let (ds, _) = load_data(&a.data, a.seed)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        budget: a.budget,
        temperatures: a.temperatures.unwrap_or(defaults.temperatures),
        patience: a.patience.unwrap_or(defaults.patience),
        max_epochs: a.max_epochs.unwrap_or(defaults.max_epochs),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        subset_source: match a.subset_source {
            SourceArg::PolicyRollout => SubsetSource::PolicyRollout,
            SourceArg::RandomUniform => SubsetSource::RandomUniform,
        },
        pretrain_epochs: a.pretrain_epochs.unwrap_or(defaults.pretrain_epochs),
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        seed: a.seed,
        hidden: a.hidden.unwrap_or(defaults.hidden),
        dropout: a.dropout.unwrap_or(defaults.dropout),
        share_backbone: a.share_backbone,
        early_stopping: match a.early_stopping {
            StopArg::Relaxed => StopMetric::Relaxed,
            StopArg::ZeroTemperature => StopMetric::ZeroTemperature,
        },
    };
    config.validate(ds.groups.group_count())?;
    let mut split_rng = ChaCha8Rng::seed_from_u64(a.seed);
    split_rng.set_stream(1);
    let ds = split_standardize(&ds, DEFAULT_FRACTIONS, &mut split_rng)?;
    let data = ds.training_data::<f64>()?;
    let (mut model, log) = fit(&data, ds.groups.clone(), &config)
        .map_err(|e| CliError { code: 3, message: format!("training aborted: {e}") })?;
    model.set_standardization(ds.standardization.clone())?;
    let bundle = ModelBundle::new(&model, ds.feature_names.clone(), ds.group_names.clone(), ds.class_names.clone(), Some(config))?;
    bundle.save(&a.out)?;
    let log_path = a.log.unwrap_or_else(|| PathBuf::from(format!("{}.log.jsonl", a.out.display())));
    let file = fs::File::create(&log_path).map_err(|e| CliError::failure(format!("cannot write {}: {e}", log_path.display())))?;
    log.write_jsonl(std::io::BufWriter::new(file)).map_err(|e| CliError::failure(e.to_string()))?;
    println!("{}", bundle.checksum());
    Ok(())
}

fn parse_budgets(text: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::config(format!("invalid budget list '{text}'"));
    let budgets: Vec<usize> = if let Some((lo, hi)) = text.split_once('-') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',').map(|b| b.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?
    };
    if budgets.is_empty() || budgets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad());
    }
    Ok(budgets)
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    let bundle = ModelBundle::load(&a.model)?;
    let model = bundle.model();
    let groups = model.groups().clone();
    let budgets = parse_budgets(&a.budgets)?;
    let metric: Metric = a.metric.parse()?;
    let regression = matches!(model.task(), dfs_core::amortized::Task::Regression);
    if regression != (metric == Metric::SquaredError) {
        return Err(CliError::config(format!("metric {} does not fit the model's task", metric.name())));
    }
    if let Some(&k) = budgets.iter().find(|&&k| k > groups.group_count()) {
        return Err(CliError::config(format!("budget {k} exceeds the model's {} groups", groups.group_count())));
    }
    let mut report = String::from("seed,budget,metric,value\n");
    for seed in 0..a.seeds {
        let (ds, table) = load_data(&a.data, seed)?;
        if ds.feature_count() != groups.feature_count() {
            return Err(CliError::config(format!(
                "data has {} features, model expects {}",
                ds.feature_count(),
                groups.feature_count()
            )));
        }
        let policy: Box<dyn Policy<f64> + '_> = match a.policy {
            PolicyArg::Model => Box::new(model),
            PolicyArg::Random => Box::new(RandomPolicy),
            PolicyArg::Static => {
                let ranking = a.ranking.clone().ok_or_else(|| CliError::config("--policy static needs --ranking"))?;
                Box::new(StaticRanked::new(ranking, groups.group_count())?)
            }
            PolicyArg::OracleGreedy => {
                let t = table.as_ref().ok_or_else(|| CliError::config("--policy oracle-greedy needs --synthetic"))?;
                Box::new(OracleGreedy(t))
            }
        };
        let values = score_curve(&policy, model, ds.rows.view(), &ds.targets, &groups, &budgets, metric, seed)?;
        for (k, v) in budgets.iter().zip(values) {
            let _ = writeln!(report, "{seed},{k},{},{v}", metric.name());
        }
        if seed == 0 {
            if let Some(path) = &a.frequency_out {
                let f = selection_frequency(&policy, ds.rows.view(), &groups, &budgets, seed)?;
                write(path, &frequency_csv(&budgets, &bundle.metadata().group_names, &f))?;
            }
        }
    }
    write(&a.out, &report)?;
    print!("{report}");
    Ok(())
}

fn load_table(a: &TableArgs) -> CliResult<(JointTable<f64>, Evidence)> {
    let table = match (&a.table, &a.synthetic) {
        (Some(path), None) => JointTable::from_path(path)?,
        (None, Some(name)) => name.parse::<SyntheticSpec>()?.table()?,
        _ => return Err(CliError::config("give exactly one of --table or --synthetic")),
    };
    let evidence: Evidence = a.evidence.parse()?;
    table.check_evidence(&evidence)?;
    Ok((table, evidence))
}

fn estimate(a: EstimateArgs) -> CliResult {
    let (table, e) = load_table(&a.table)?;
    let d = table.feature_count();
    let obs: Observation<f64> = e.to_observation(d)?;
    let store;
    let sampler = match a.sampler {
        SamplerArg::Oracle => FeatureSampler::OracleConditional(&table),
        SamplerArg::Marginal => {
            let sampler = table.instance_sampler()?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            rng.set_stream(u64::MAX);
            let mut rows = Array2::zeros((a.marginal_rows.max(1), d));
            for mut row in rows.rows_mut() {
                for (r, c) in row.iter_mut().zip(sampler.sample(&mut rng)?.0) {
                    *r = c as f64;
                }
            }
            store = ColumnStore::new(rows, dfs_core::amortized::GroupMatrix::identity(d))?;
            FeatureSampler::MarginalEmpirical(&store)
        }
    };
    let scores = estimate_all(&sampler, &TablePredictor(&table), &obs, a.samples, a.seed)?;
    let mut out = String::from("feature,name,estimate\n");
    for (i, v) in scores {
        let _ = writeln!(out, "{i},{},{v:.6}", table.names()[i]);
    }
    if let Some(path) = &a.out {
        write(path, &out)?;
    }
    print!("{out}");
    Ok(())
}

fn oracle(a: OracleArgs) -> CliResult {
    let (table, e) = load_table(&a.table)?;
    let greedy = table.greedy_oracle_policy(&e)?;
    let mut out = String::from("feature,name,cmi,greedy\n");
    for (i, v) in table.cmi_scores(&e)? {
        let _ = writeln!(out, "{i},{},{v:.6},{}", table.names()[i], u8::from(i == greedy));
    }
    if let Some(path) = &a.out {
        write(path, &out)?;
    }
    print!("{out}");
    Ok(())
}

fn generate(a: GenerateArgs) -> CliResult {
    let spec: SyntheticSpec = a.synthetic.parse()?;
    let (ds, table) = generate_synthetic(spec, a.samples, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let mut out = ds.feature_names.join(",");
    out.push_str(",y\n");
    for (i, row) in ds.rows.rows().into_iter().enumerate() {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = match &ds.targets {
            Targets::Classes { labels, .. } => writeln!(out, "{}", labels[i]),
            Targets::Real(values) => writeln!(out, "{}", values[i]),
        };
    }
    write(&a.out, &out)?;
    if let Some(path) = &a.table_out {
        table.save(path)?;
    }
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> CliResult {
    let bundle = ModelBundle::load(&a.model)?;
    let addr = resolve_bind(a.bind.as_deref()).map_err(CliError::config)?;
    let manager = Arc::new(SessionManager::new(Arc::new(bundle), Duration::from_secs(a.idle_timeout_secs)));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::failure(e.to_string()))?;
    runtime.block_on(serve(manager, addr)).map_err(|e| CliError::failure(e.to_string()))
}
