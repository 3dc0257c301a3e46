//! Splitters, metrics and the budgeted candidate evaluation shared by all
//! optimizers.

mod metrics;
mod split;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{auroc, error_rate, log_loss, Metric, MetricError, LOG_LOSS_EPS};
pub use split::{kfold_splits, mccv_splits, Split, SplitError};

use crate::components::{fit_pipeline_checked, ComponentError};
use crate::dataset::Dataset;
use crate::space::{Catalog, Pipeline};

/// Monotonic time source, injectable for tests.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

/// Wall clock measured from construction.
#[derive(Debug, Clone)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// A clock that advances by a fixed step on every reading.
///
/// With a step at least as long as the evaluation deadline, every deadline
/// check fails: this is the zero-deadline clock used to test timeouts.
#[derive(Debug)]
pub struct StepClock {
    step: Duration,
    ticks: AtomicU64,
}

impl StepClock {
    pub fn new(step: Duration) -> Self {
        StepClock {
            step,
            ticks: AtomicU64::new(0),
        }
    }
}

impl Clock for StepClock {
    fn now(&self) -> Duration {
        let t = self.ticks.fetch_add(1, Ordering::Relaxed);
        self.step.saturating_mul(t.min(u64::from(u32::MAX)) as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scheme {
    Kfold { k: usize },
    Mccv { train_fraction: f64, repetitions: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSpec {
    pub scheme: Scheme,
    pub seed: u64,
    pub per_eval_deadline: Duration,
    pub metric: Metric,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("k-fold needs k >= 2, got {0}")]
    Folds(usize),
    #[error("train fraction must lie in (0, 1), got {0}")]
    Fraction(f64),
    #[error("at least one repetition required")]
    Repetitions,
    #[error("evaluation deadline must be positive")]
    Deadline,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Split(#[from] SplitError),
}

impl ValidationSpec {
    /// Stratified 5-fold cross-validation.
    pub fn five_fold(metric: Metric, seed: u64, per_eval_deadline: Duration) -> Self {
        ValidationSpec {
            scheme: Scheme::Kfold { k: 5 },
            seed,
            per_eval_deadline,
            metric,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        match self.scheme {
            Scheme::Kfold { k } if k < 2 => return Err(SpecError::Folds(k)),
            Scheme::Mccv { train_fraction, .. } if !(train_fraction > 0.0 && train_fraction < 1.0) => {
                return Err(SpecError::Fraction(train_fraction))
            }
            Scheme::Mccv { repetitions: 0, .. } => return Err(SpecError::Repetitions),
            _ => {}
        }
        if self.per_eval_deadline.is_zero() {
            return Err(SpecError::Deadline);
        }
        Ok(())
    }

    pub fn splits(&self, data: &Dataset) -> Result<Vec<Split>, SplitError> {
        match self.scheme {
            Scheme::Kfold { k } => kfold_splits(data.len(), k, data.labels(), self.seed),
            Scheme::Mccv {
                train_fraction,
                repetitions,
            } => mccv_splits(data.len(), train_fraction, repetitions, data.labels(), self.seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    Timeout,
    Failed,
}

/// Outcome of one budgeted candidate evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub status: EvalStatus,
    /// Mean per-split score, higher is better. Present iff `status` is ok.
    pub oriented_score: Option<f64>,
    /// Raw per-split metric values (completed splits only).
    pub raw_fold_scores: Vec<f64>,
    pub wall_time: Duration,
    pub failure_reason: Option<String>,
}

impl EvalResult {
    pub fn ok(oriented_score: f64, raw_fold_scores: Vec<f64>, wall_time: Duration) -> Self {
        EvalResult {
            status: EvalStatus::Ok,
            oriented_score: Some(oriented_score),
            raw_fold_scores,
            wall_time,
            failure_reason: None,
        }
    }

    pub fn failed(reason: impl Into<String>, wall_time: Duration) -> Self {
        EvalResult {
            status: EvalStatus::Failed,
            oriented_score: None,
            raw_fold_scores: Vec::new(),
            wall_time,
            failure_reason: Some(reason.into()),
        }
    }

    pub fn timeout(raw_fold_scores: Vec<f64>, wall_time: Duration) -> Self {
        EvalResult {
            status: EvalStatus::Timeout,
            oriented_score: None,
            raw_fold_scores,
            wall_time,
            failure_reason: Some("evaluation deadline exceeded".into()),
        }
    }

    /// Score used for comparisons; failed and timed-out evaluations rank below
    /// everything.
    pub fn comparable(&self) -> f64 {
        self.oriented_score.unwrap_or(f64::NEG_INFINITY)
    }

    /// Mean of the raw per-split scores, when the evaluation succeeded.
    pub fn raw_mean(&self) -> Option<f64> {
        (self.status == EvalStatus::Ok && !self.raw_fold_scores.is_empty())
            .then(|| self.raw_fold_scores.iter().sum::<f64>() / self.raw_fold_scores.len() as f64)
    }
}

/// A total performance estimator over pipelines.
pub trait Evaluator: Sync {
    fn evaluate(&self, pipeline: &Pipeline) -> EvalResult;
}

impl<F> Evaluator for F
where
    F: Fn(&Pipeline) -> EvalResult + Sync,
{
    fn evaluate(&self, pipeline: &Pipeline) -> EvalResult {
        self(pipeline)
    }
}

/// Cross-validated evaluation of pipelines on one dataset. Splits are computed
/// once, so every candidate sees the same folds.
pub struct DatasetEvaluator<'a> {
    catalog: &'a Catalog,
    data: &'a Dataset,
    spec: ValidationSpec,
    splits: Vec<(Dataset, Dataset)>,
    clock: &'a dyn Clock,
}

impl<'a> DatasetEvaluator<'a> {
    pub fn new(
        catalog: &'a Catalog,
        data: &'a Dataset,
        spec: ValidationSpec,
        clock: &'a dyn Clock,
    ) -> Result<Self, SpecError> {
        spec.validate()?;
        spec.metric.check_task(data.task_kind())?;
        let splits = spec
            .splits(data)?
            .into_iter()
            .map(|s| (data.subset(&s.train), data.subset(&s.test)))
            .collect();
        Ok(DatasetEvaluator {
            catalog,
            data,
            spec,
            splits,
            clock,
        })
    }

    pub fn spec(&self) -> &ValidationSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    fn run(&self, pipeline: &Pipeline) -> EvalResult {
        let start = self.clock.now();
        let elapsed = || self.clock.now().saturating_sub(start);
        let deadline = self.spec.per_eval_deadline;
        let expired = || elapsed() >= deadline;
        if let Err(e) = self.catalog.check_pipeline(pipeline) {
            return EvalResult::failed(e.to_string(), elapsed());
        }
        let mut raw = Vec::with_capacity(self.splits.len());
        for (train, test) in &self.splits {
            if expired() {
                return EvalResult::timeout(raw, elapsed());
            }
            let fitted = match fit_pipeline_checked(pipeline, self.catalog, train, &expired) {
                Ok(f) => f,
                Err(ComponentError::Interrupted(_)) => return EvalResult::timeout(raw, elapsed()),
                Err(e) => return EvalResult::failed(e.to_string(), elapsed()),
            };
            let scored = fitted
                .predict_proba(test.features().view())
                .map_err(|e| e.to_string())
                .and_then(|p| {
                    self.spec
                        .metric
                        .score(test.labels(), p.view())
                        .map_err(|e| e.to_string())
                });
            match scored {
                Ok(v) => raw.push(v),
                Err(reason) => return EvalResult::failed(reason, elapsed()),
            }
        }
        if expired() {
            return EvalResult::timeout(raw, elapsed());
        }
        let oriented =
            raw.iter().map(|&v| self.spec.metric.orient(v)).sum::<f64>() / raw.len() as f64;
        EvalResult::ok(oriented, raw, elapsed())
    }
}

impl Evaluator for DatasetEvaluator<'_> {
    fn evaluate(&self, pipeline: &Pipeline) -> EvalResult {
        self.run(pipeline)
    }
}

/// Fits and scores `pipeline` on every split of `spec`. Never fails: problems
/// are reported through the result status.
pub fn evaluate(
    pipeline: &Pipeline,
    catalog: &Catalog,
    data: &Dataset,
    spec: &ValidationSpec,
    clock: &dyn Clock,
) -> EvalResult {
    match DatasetEvaluator::new(catalog, data, spec.clone(), clock) {
        Ok(e) => e.run(pipeline),
        Err(e) => EvalResult::failed(e.to_string(), Duration::ZERO),
    }
}
