use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use naiveml::evaluation::Metric;
use naiveml::harness::{self, BenchmarkConfig, DataError, HarnessError, Problem, Report};
use naiveml::optimizers::{brute_force_with, naivety_violation, Budget, BruteForceOptions, OptimizerKind};
use naiveml::space::CatalogError;
use naiveml::surrogate::SurrogateSurface;
use naiveml::Catalog;

#[derive(Parser)]
#[command(name = "naiveml", version, about = "Slot-wise pipeline optimization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run optimizers on datasets and write traces and run records.
    Run {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        label: String,
        #[arg(long, value_delimiter = ',', default_value = "naive,quasi-naive,random")]
        optimizers: Vec<OptimizerKind>,
        /// Inclusive range `a..b`, a comma list, or a single seed.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(long)]
        budget_seconds: f64,
        #[arg(long)]
        budget_evals: Option<u64>,
        #[arg(long, default_value_t = 60.0)]
        eval_deadline_seconds: f64,
        #[arg(long, default_value = "auroc")]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        train_fraction: f64,
    },
    /// Turn a run directory into plot-ready csv.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Report,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Exhaustive optimum and naivety diagnostic of a synthetic surface.
    Oracle {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        surface: PathBuf,
    },
}

enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::Config(e.to_string()),
            HarnessError::Io { .. } | HarnessError::Parse { .. } => Failure::Io(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_catalog(path: &Path) -> Result<Catalog, Failure> {
    Catalog::from_json(&read(path)?).map_err(|e: CatalogError| Failure::Config(format!("{}: {e}", path.display())))
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Config(format!("invalid seeds `{text}`"));
    let seeds: Vec<u64> = match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            (a..=b).collect()
        }
        None => text
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn seconds(value: f64, what: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(value).map_err(|_| Failure::Config(format!("{what} must be a non-negative number of seconds")))
}

fn load_dataset(path: &Path, label: &str) -> Result<Problem, Failure> {
    let data = harness::load_csv(path, label).map_err(|e| match e {
        DataError::Io { .. } => Failure::Io(e.to_string()),
        _ => Failure::Config(format!("{}: {e}", path.display())),
    })?;
    let id = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Problem::Dataset { id, data })
}

#[allow(clippy::too_many_arguments)]
fn run(
    catalog: &Path,
    data: &[PathBuf],
    label: &str,
    optimizers: Vec<OptimizerKind>,
    seeds: &str,
    budget_seconds: f64,
    budget_evals: Option<u64>,
    eval_deadline_seconds: f64,
    metric: Metric,
    out: &Path,
    train_fraction: f64,
) -> Result<(), Failure> {
    let catalog = load_catalog(catalog)?;
    let problems = data.iter().map(|p| load_dataset(p, label)).collect::<Result<Vec<_>, _>>()?;
    let mut config = BenchmarkConfig::new(catalog, problems, out);
    config.optimizers = optimizers;
    config.seeds = parse_seeds(seeds)?;
    config.budget = Budget {
        wall: Some(seconds(budget_seconds, "--budget-seconds")?),
        evaluations: budget_evals,
    };
    config.per_eval_deadline = seconds(eval_deadline_seconds, "--eval-deadline-seconds")?;
    config.metric = metric;
    config.outer_train_fraction = train_fraction;
    let records = harness::run_benchmark(&config)?;
    for r in &records {
        let score = r.final_test_raw.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let status = r.error.as_deref().unwrap_or("ok");
        println!("{}\t{}={}\tevaluations={}\t{}", r.run_id, metric, score, r.evaluations, status);
    }
    Ok(())
}

fn analyze(input: &Path, report: Report, format: &str) -> Result<(), Failure> {
    if format != "csv" {
        return Err(Failure::Config(format!("unsupported format `{format}` (only csv)")));
    }
    let records = harness::load_records(input)?;
    print!("{}", harness::render_report(&records, report));
    Ok(())
}

fn oracle(catalog: &Path, surface: &Path) -> Result<(), Failure> {
    let catalog = load_catalog(catalog)?;
    let surface = SurrogateSurface::from_json(&read(surface)?).map_err(Failure::Config)?;
    surface.check_catalog(&catalog).map_err(|e| Failure::Config(e.to_string()))?;
    let options = BruteForceOptions {
        defaults_only: true,
        ..Default::default()
    };
    let best = brute_force_with(&catalog, &surface, &options).map_err(|e| Failure::Config(e.to_string()))?;
    let report = naivety_violation(&catalog, &surface, &options).map_err(|e| Failure::Config(e.to_string()))?;
    let out = serde_json::json!({
        "brute_force": {
            "pipeline": best.pipeline,
            "score": best.score,
            "evaluations": best.evaluations,
        },
        "naivety_violation": report,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            catalog,
            data,
            label,
            optimizers,
            seeds,
            budget_seconds,
            budget_evals,
            eval_deadline_seconds,
            metric,
            out,
            train_fraction,
        } => run(
            &catalog,
            &data,
            &label,
            optimizers,
            &seeds,
            budget_seconds,
            budget_evals,
            eval_deadline_seconds,
            metric,
            &out,
            train_fraction,
        ),
        Command::Analyze { input, report, format } => analyze(&input, report, &format),
        Command::Oracle { catalog, surface } => oracle(&catalog, &surface),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
