mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use txnforge::abm::{self, ConfigFile, SEED_ENV};
use txnforge::detectors::ComponentRule;
use txnforge::features::{self, TimeAverage, COLUMN_NAMES};
use txnforge::io_export::{self, TRANSACTIONS_FILE};
use txnforge::metrics::ks_two_sample;
use txnforge::{FeatureSet, Label, ModelKind};

use error::{CliError, CliResult, Stage};
use report::{DetectInput, Detector, Granularity};

#[derive(Parser)]
#[command(
    name = "txnforge",
    version,
    about = "Synthetic transaction data and outlier detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a run and write its artifacts.
    Generate(GenerateArgs),
    /// Per-agent features from a run directory.
    Features(FeaturesArgs),
    /// Fit a detector and write a report.
    Detect(DetectArgs),
    /// Two-sample KS test on one CSV column.
    Compare(CompareArgs),
    /// Hourly transaction histogram as SVG.
    Plot(PlotArgs),
    /// Graph run as Graphviz DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Simple,
    Graph,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Simple => ModelKind::Simple,
            ModelArg::Graph => ModelKind::Graph,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Overrides `model_kind` in the config.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// TOML, or JSON with a `.json` extension.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Average send times on the clock face instead of arithmetically.
    #[arg(long)]
    circular_time: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Dtree,
    Gmm,
    Iforest,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Per-agent features written by `features`.
    #[arg(long, conflicts_with = "events", required_unless_present = "events")]
    features: Option<PathBuf>,
    /// time, all, in_degree or out_degree.
    #[arg(long, value_parser = parse_feature_set, requires = "features")]
    feature_set: Option<FeatureSet>,
    /// Simple-model run directory: one row per event, holding its step.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    max_depth: usize,
    #[arg(long, default_value_t = 2)]
    components: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Treat this GMM component as suspicious instead of the lightest one.
    #[arg(long)]
    suspicious_component: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    contamination: f64,
    #[arg(long, default_value_t = 100)]
    n_trees: usize,
    /// Defaults to min(256, rows).
    #[arg(long)]
    subsample: Option<usize>,
    /// Score a seeded holdout of this fraction instead of the training rows.
    #[arg(long)]
    holdout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    s.parse().map_err(|e: txnforge::Error| e.to_string())
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    column: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportDotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep only the hour starting at this clock hour.
    #[arg(long)]
    window: Option<u32>,
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn generate(args: GenerateArgs) -> CliResult<()> {
    let file = ConfigFile::load(&args.config).input()?;
    let seed = abm::resolve_seed(args.seed, file.seed, env_seed().as_deref()).input()?;
    let config = file.resolve(args.model.map(Into::into), seed).input()?;
    let run = abm::run(&config).input()?;
    let artifacts = io_export::write_run(&run, &args.out).output()?;

    let suspicious_agents = run
        .agents
        .iter()
        .filter(|a| a.label.is_suspicious())
        .count();
    let suspicious_events = run
        .events
        .iter()
        .filter(|e| e.sender_label.is_suspicious())
        .count();
    let fraction = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    println!(
        "{} run, seed {}: {} agents ({} suspicious, fraction {:.4}), {} events (suspicious fraction {:.4}) -> {}",
        artifacts.summary.model_kind.as_str(),
        seed,
        run.agents.len(),
        suspicious_agents,
        fraction(suspicious_agents, run.agents.len()),
        run.events.len(),
        fraction(suspicious_events, run.events.len()),
        artifacts.dir.display(),
    );
    Ok(())
}

fn features(args: FeaturesArgs) -> CliResult<()> {
    io_export::verify_manifest(&args.input).input()?;
    let run = io_export::read_run(&args.input).input()?;
    let average = if args.circular_time {
        TimeAverage::Circular
    } else {
        TimeAverage::Arithmetic
    };
    let rows = features::extract_features_with(&run, average);
    io_export::write_features(&rows, &args.out).output()?;

    println!("{} rows -> {}", rows.len(), args.out.display());
    println!("{:<11} {}", "class", COLUMN_NAMES.join(" "));
    for label in [Label::Normal, Label::Suspicious] {
        let means: Vec<String> = features::class_means(&rows, label)
            .iter()
            .zip(COLUMN_NAMES)
            .map(|(m, name)| {
                let cell = m.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
                format!("{cell:>w$}", w = name.len())
            })
            .collect();
        println!("{:<11} {}", label.as_str(), means.join(" "));
    }
    Ok(())
}

fn detect(args: DetectArgs) -> CliResult<()> {
    let seed = abm::resolve_seed(args.seed, None, env_seed().as_deref()).input()?;
    let input = match (&args.features, &args.events) {
        (Some(path), _) => {
            let set = args.feature_set.ok_or_else(|| {
                CliError::Usage("--feature-set is required with --features".into())
            })?;
            let bytes = io_export::read_file(path).input()?;
            let rows = io_export::read_features(path).input()?;
            DetectInput {
                selection: features::select_columns(&rows, set).input()?,
                feature_set: set.cli_name().to_string(),
                granularity: Granularity::Agent,
                input_sha256: io_export::sha256_hex(&bytes),
            }
        }
        (None, Some(dir)) => {
            io_export::verify_manifest(dir).input()?;
            let run = io_export::read_run(dir).input()?;
            let bytes = io_export::read_file(&dir.join(TRANSACTIONS_FILE)).input()?;
            DetectInput {
                selection: features::event_steps(&run).input()?,
                feature_set: "step".to_string(),
                granularity: Granularity::Event,
                input_sha256: io_export::sha256_hex(&bytes),
            }
        }
        (None, None) => return Err(CliError::Usage("give --features or --events".into())),
    };

    let detector = match args.algo {
        Algo::Dtree => Detector::Dtree {
            max_depth: args.max_depth,
        },
        Algo::Gmm => Detector::Gmm {
            n_components: args.components,
            max_iters: args.max_iters,
            tol: 1e-6,
            var_floor: 1e-6,
            suspicious: args
                .suspicious_component
                .map_or(ComponentRule::SmallestWeight, ComponentRule::Index),
        },
        Algo::Iforest => Detector::Iforest {
            n_trees: args.n_trees,
            subsample_size: args.subsample,
            contamination: args.contamination,
        },
    };

    let report = report::run_detector(detector, input, seed, args.holdout).input()?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    io_export::write_file(&args.out, json.as_bytes()).output()?;

    let cm = &report.confusion_matrix;
    println!("                 predicted normal  predicted suspicious");
    println!("true normal      {:>16}  {:>20}", cm.tn, cm.fp);
    println!("true suspicious  {:>16}  {:>20}", cm.fn_, cm.tp);
    let m = &report.metrics;
    println!(
        "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  mcc {:.4}",
        m.accuracy, m.precision, m.recall, m.f1, m.mcc
    );
    println!("report -> {}", args.out.display());
    Ok(())
}

fn compare(args: CompareArgs) -> CliResult<()> {
    let a = io_export::read_numeric_column(&args.a, &args.column).input()?;
    let b = io_export::read_numeric_column(&args.b, &args.column).input()?;
    let ks = ks_two_sample(&a, &b).input()?;
    if args.json {
        let out = serde_json::json!({
            "column": args.column,
            "statistic": ks.statistic,
            "p_value": ks.p_value,
            "n_a": ks.n_a,
            "n_b": ks.n_b,
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    } else {
        println!("column {} (n_a {}, n_b {})", args.column, ks.n_a, ks.n_b);
        println!("D = {}", ks.statistic);
        println!("p = {}", ks.p_value);
    }
    Ok(())
}

fn plot(args: PlotArgs) -> CliResult<()> {
    let run = io_export::read_run(&args.input).input()?;
    io_export::plot_histogram_svg(&run, &args.out).output()?;
    println!("histogram -> {}", args.out.display());
    Ok(())
}

fn export_dot(args: ExportDotArgs) -> CliResult<()> {
    let run = io_export::read_run(&args.input).input()?;
    io_export::export_graph_dot(&run, &args.out, args.window).output()?;
    println!("graph -> {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Features(a) => features(a),
        Command::Detect(a) => detect(a),
        Command::Compare(a) => compare(a),
        Command::Plot(a) => plot(a),
        Command::ExportDot(a) => export_dot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
