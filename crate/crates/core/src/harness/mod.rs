//! Benchmark orchestration, trace persistence and anytime analyses.
//!
//! A benchmark crosses problems (datasets or synthetic surfaces), seeds and
//! optimizers. For every (problem, seed) one outer train/test split is drawn
//! and shared by all optimizers. Each run streams its improvements to
//! `<out>/traces/<run_id>.jsonl` as they happen and finally writes a
//! [`RunRecord`] to `<out>/runs/<run_id>.json`.

pub mod analysis;
mod data;
mod report;

use std::fs::File;
use std::io::{BufRead, BufReader, LineWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::{check_implementations, fit_pipeline};
use crate::dataset::Dataset;
use crate::evaluation::{Clock, DatasetEvaluator, EvalStatus, Evaluator, Metric, SystemClock, ValidationSpec};
use crate::exec::Execution;
use crate::optimizers::{
    default_permutation, fit_probe, repair, Budget, BruteForceOptions, BruteForceSearch, Optimizer, OptimizerKind,
    RandomSearch, SlotwiseSearch, TraceEvent,
};
use crate::space::{Catalog, Params, Pipeline};
use crate::surrogate::SurrogateSurface;

pub use data::{load_csv, outer_split, read_table, synthetic_table, write_table, DataError};
pub use report::{load_records, render_report, Report};

/// Environment variable that sets the number of concurrent runs.
pub const WORKERS_ENV: &str = "NAIVEML_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl HarnessError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
        move |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLine {
    pub run_id: String,
    pub elapsed_ms: u64,
    pub slot: Option<usize>,
    pub component_id: Option<String>,
    pub params: Params,
    pub local_score: f64,
    pub global_score: f64,
    pub status: EvalStatus,
}

impl TraceLine {
    pub fn from_event(run_id: &str, event: &TraceEvent) -> Self {
        TraceLine {
            run_id: run_id.to_string(),
            elapsed_ms: u64::try_from(event.elapsed.as_millis()).unwrap_or(u64::MAX),
            slot: event.trigger_slot,
            component_id: event.component_id.clone(),
            params: event.params.clone(),
            local_score: event.local_score,
            global_score: event.oriented_score,
            status: event.status,
        }
    }
}

/// Parses a trace file; every line must match [`TraceLine`] exactly.
pub fn read_trace(path: &Path) -> Result<Vec<TraceLine>, HarnessError> {
    let file = File::open(path).map_err(HarnessError::io(path))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let line = line.map_err(HarnessError::io(path))?;
            serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub optimizer: OptimizerKind,
    pub dataset: String,
    pub seed: u64,
    pub budget: Budget,
    pub metric: Metric,
    pub validation: Option<ValidationSpec>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub events: Vec<TraceEvent>,
    pub evaluations: u64,
    /// Hand-off pipeline after repair.
    pub final_pipeline: Option<Pipeline>,
    /// Slots blanked by repair.
    pub repaired_slots: Vec<usize>,
    pub final_validation_score: Option<f64>,
    /// Oriented test score of the final pipeline.
    pub final_test_score: Option<f64>,
    /// Test metric value in its natural orientation.
    pub final_test_raw: Option<f64>,
    pub total_wall_ms: u64,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

/// What an optimizer is run on.
#[derive(Debug, Clone)]
pub enum Problem {
    Dataset { id: String, data: Dataset },
    Surrogate { id: String, surface: SurrogateSurface },
}

impl Problem {
    pub fn id(&self) -> &str {
        match self {
            Problem::Dataset { id, .. } | Problem::Surrogate { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub catalog: Catalog,
    pub problems: Vec<Problem>,
    pub optimizers: Vec<OptimizerKind>,
    pub seeds: Vec<u64>,
    pub budget: Budget,
    pub metric: Metric,
    pub per_eval_deadline: Duration,
    pub outer_train_fraction: f64,
    pub out_dir: PathBuf,
    /// Concurrent runs; [`WORKERS_ENV`] takes precedence, then the number of CPUs.
    pub workers: Option<usize>,
    pub execution: Execution,
}

impl BenchmarkConfig {
    pub fn new(catalog: Catalog, problems: Vec<Problem>, out_dir: impl Into<PathBuf>) -> Self {
        BenchmarkConfig {
            catalog,
            problems,
            optimizers: vec![OptimizerKind::Naive, OptimizerKind::QuasiNaive, OptimizerKind::Random],
            seeds: vec![0],
            budget: Budget::wall(Duration::from_secs(60)),
            metric: Metric::Auroc,
            per_eval_deadline: Duration::from_secs(60),
            outer_train_fraction: 0.9,
            out_dir: out_dir.into(),
            workers: None,
            execution: Execution::default(),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if !self.budget.is_bounded() {
            return fail("budget needs a time or evaluation limit".into());
        }
        if self.optimizers.is_empty() || self.seeds.is_empty() || self.problems.is_empty() {
            return fail("need at least one problem, optimizer and seed".into());
        }
        if self.per_eval_deadline.is_zero() {
            return fail("evaluation deadline must be positive".into());
        }
        let mut ids: Vec<&str> = self.problems.iter().map(Problem::id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return fail("problem ids must be unique".into());
        }
        for p in &self.problems {
            match p {
                Problem::Dataset { id, data } => {
                    check_implementations(&self.catalog).map_err(|e| HarnessError::Config(e.to_string()))?;
                    self.metric
                        .check_task(data.task_kind())
                        .map_err(|e| HarnessError::Config(format!("{id}: {e}")))?;
                }
                Problem::Surrogate { id, surface } => {
                    surface
                        .check_catalog(&self.catalog)
                        .map_err(|e| HarnessError::Config(format!("{id}: {e}")))?;
                }
            }
        }
        Ok(())
    }
}

/// Number of concurrent runs: [`WORKERS_ENV`] if set, else `configured`, else
/// the available parallelism.
pub fn worker_count(configured: Option<usize>) -> Result<usize, HarnessError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(configured.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))),
    }
}

struct Job<'a> {
    problem: &'a Problem,
    seed: u64,
    optimizer: OptimizerKind,
    split: Option<&'a (crate::evaluation::Split, Dataset, Dataset)>,
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

pub fn run_id(problem: &str, optimizer: OptimizerKind, seed: u64) -> String {
    format!("{}__{}__seed{}", file_safe(problem), optimizer, seed)
}

/// Runs every (problem, seed, optimizer) combination and writes traces and
/// records under the output directory. A failing run is recorded with its
/// error; only configuration and I/O problems abort the benchmark.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<RunRecord>, HarnessError> {
    config.validate()?;
    let workers = worker_count(config.workers)?;
    let traces = config.out_dir.join("traces");
    let runs = config.out_dir.join("runs");
    std::fs::create_dir_all(&traces).map_err(HarnessError::io(&traces))?;
    std::fs::create_dir_all(&runs).map_err(HarnessError::io(&runs))?;

    let mut splits = Vec::new();
    for p in &config.problems {
        for &seed in &config.seeds {
            let split = match p {
                Problem::Dataset { id, data } => Some(
                    outer_split(data, config.outer_train_fraction, seed)
                        .map_err(|e| HarnessError::Config(format!("{id}: {e}")))?,
                ),
                Problem::Surrogate { .. } => None,
            };
            splits.push((p, seed, split));
        }
    }
    let jobs: Vec<Job> = splits
        .iter()
        .flat_map(|(problem, seed, split)| {
            config.optimizers.iter().map(move |&optimizer| Job {
                problem,
                seed: *seed,
                optimizer,
                split: split.as_ref(),
            })
        })
        .collect();

    let results = config
        .execution
        .with_workers(workers, || config.execution.map_slice(&jobs, |job| run_job(config, job, &traces, &runs)));
    results.into_iter().collect()
}

fn make_optimizer<'a, E: Evaluator + ?Sized>(
    kind: OptimizerKind,
    catalog: &'a Catalog,
    evaluator: &'a E,
    budget: Budget,
    seed: u64,
    clock: &'a dyn Clock,
) -> Result<Box<dyn Optimizer + 'a>, String> {
    Ok(match kind {
        OptimizerKind::Naive => Box::new(SlotwiseSearch::naive(catalog, evaluator, budget, seed, clock)),
        OptimizerKind::QuasiNaive => Box::new(
            SlotwiseSearch::quasi(catalog, &default_permutation(catalog), evaluator, budget, seed, clock)
                .map_err(|e| e.to_string())?,
        ),
        OptimizerKind::Random => Box::new(RandomSearch::new(catalog, evaluator, budget, seed, clock)),
        OptimizerKind::BruteForce => {
            let options = BruteForceOptions {
                defaults_only: true,
                execution: Execution::Sequential,
                ..Default::default()
            };
            Box::new(BruteForceSearch::new(catalog, evaluator, budget, &options, clock).map_err(|e| e.to_string())?)
        }
    })
}

struct Streamed {
    events: Vec<TraceEvent>,
    incumbent: Pipeline,
    evaluations: u64,
    notes: Vec<String>,
}

fn stream(mut optimizer: Box<dyn Optimizer + '_>, run_id: &str, trace: &Path) -> Result<Streamed, HarnessError> {
    let file = File::create(trace).map_err(HarnessError::io(trace))?;
    let mut out = LineWriter::new(file);
    let mut events = Vec::new();
    for event in optimizer.by_ref() {
        let line = serde_json::to_string(&TraceLine::from_event(run_id, &event)).expect("trace line serializes");
        writeln!(out, "{line}").map_err(HarnessError::io(trace))?;
        events.push(event);
    }
    out.flush().map_err(HarnessError::io(trace))?;
    Ok(Streamed {
        events,
        incumbent: optimizer.incumbent(),
        evaluations: optimizer.evaluations(),
        notes: optimizer.notes(),
    })
}

fn run_job(config: &BenchmarkConfig, job: &Job, traces: &Path, runs: &Path) -> Result<RunRecord, HarnessError> {
    let started = Instant::now();
    let id = run_id(job.problem.id(), job.optimizer, job.seed);
    let trace = traces.join(format!("{id}.jsonl"));
    let clock = SystemClock::new();
    let catalog = &config.catalog;
    let mut record = RunRecord {
        run_id: id.clone(),
        optimizer: job.optimizer,
        dataset: job.problem.id().to_string(),
        seed: job.seed,
        budget: config.budget,
        metric: config.metric,
        validation: None,
        train_indices: Vec::new(),
        test_indices: Vec::new(),
        events: Vec::new(),
        evaluations: 0,
        final_pipeline: None,
        repaired_slots: Vec::new(),
        final_validation_score: None,
        final_test_score: None,
        final_test_raw: None,
        total_wall_ms: 0,
        notes: Vec::new(),
        error: None,
    };

    match (job.problem, job.split) {
        (Problem::Dataset { .. }, Some((split, train, test))) => {
            record.train_indices = split.train.clone();
            record.test_indices = split.test.clone();
            let spec = ValidationSpec::five_fold(config.metric, job.seed, config.per_eval_deadline);
            record.validation = Some(spec.clone());
            match DatasetEvaluator::new(catalog, train, spec, &clock) {
                Err(e) => record.error = Some(e.to_string()),
                Ok(evaluator) => {
                    match make_optimizer(job.optimizer, catalog, &evaluator, config.budget, job.seed, &clock) {
                        Err(e) => record.error = Some(e),
                        Ok(optimizer) => {
                            let s = stream(optimizer, &id, &trace)?;
                            finish_on_data(config, &mut record, s, train, test);
                        }
                    }
                }
            }
        }
        (Problem::Surrogate { surface, .. }, _) => {
            match make_optimizer(job.optimizer, catalog, surface, config.budget, job.seed, &clock) {
                Err(e) => record.error = Some(e),
                Ok(optimizer) => {
                    let s = stream(optimizer, &id, &trace)?;
                    let score = surface.score(&s.incumbent);
                    record.final_validation_score = s.events.last().map(|e| e.oriented_score);
                    record.final_pipeline = Some(s.incumbent);
                    record.events = s.events;
                    record.evaluations = s.evaluations;
                    record.notes = s.notes;
                    match score {
                        Ok(v) => {
                            record.final_test_score = Some(v);
                            record.final_test_raw = Some(v);
                        }
                        Err(e) => record.error = Some(e.to_string()),
                    }
                }
            }
        }
        (Problem::Dataset { .. }, None) => unreachable!("dataset jobs carry a split"),
    }
    if record.error.is_some() && !trace.exists() {
        File::create(&trace).map_err(HarnessError::io(&trace))?;
    }
    record.total_wall_ms = u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX);
    let path = runs.join(format!("{id}.json"));
    let text = serde_json::to_string_pretty(&record).expect("record serializes");
    std::fs::write(&path, text).map_err(HarnessError::io(&path))?;
    Ok(record)
}

fn finish_on_data(config: &BenchmarkConfig, record: &mut RunRecord, s: Streamed, train: &Dataset, test: &Dataset) {
    let catalog = &config.catalog;
    record.final_validation_score = s.events.last().map(|e| e.oriented_score);
    record.events = s.events;
    record.evaluations = s.evaluations;
    record.notes = s.notes;
    let repaired = match repair(&s.incumbent, catalog, fit_probe(catalog, train)) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return;
        }
    };
    record.repaired_slots = repaired.removed;
    let scored = fit_pipeline(&repaired.pipeline, catalog, train)
        .and_then(|f| f.predict_proba(test.features().view()))
        .map_err(|e| e.to_string())
        .and_then(|p| config.metric.score(test.labels(), p.view()).map_err(|e| e.to_string()));
    record.final_pipeline = Some(repaired.pipeline);
    match scored {
        Ok(raw) => {
            record.final_test_raw = Some(raw);
            record.final_test_score = Some(config.metric.orient(raw));
        }
        Err(e) => record.error = Some(e),
    }
}
