//! Pipeline optimizers.
//!
//! Every optimizer is an iterator of [`TraceEvent`]s: an event is produced
//! whenever an evaluation strictly improves on the best score seen so far, and
//! the iterator ends when the [`Budget`] runs out (or, for the slot-wise
//! optimizers, when there is nothing left to tune). After the stream ends,
//! [`Optimizer::incumbent`] returns the pipeline the optimizer would hand off.

mod brute;
mod compose;
mod random;
mod repair;
mod slotwise;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::evaluation::{Clock, EvalResult, EvalStatus};
use crate::space::{Params, Pipeline};

pub use brute::{
    brute_force, brute_force_with, naivety_violation, BruteForceError, BruteForceOptions,
    BruteForceResult, BruteForceSearch, SlotViolation, DEFAULT_SPACE_CAP,
};
pub use compose::{get_pipeline_naive, get_pipeline_quasi, Candidate, ComposeError};
pub use random::{random_search, RandomSearch};
pub use repair::{fit_probe, repair, RepairError, Repaired};
pub use slotwise::{default_permutation, naive_automl, quasi_naive_automl, SlotwiseSearch};

/// Stopping rule for an optimizer run. At least one limit must be set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Budget {
    pub wall: Option<Duration>,
    pub evaluations: Option<u64>,
}

impl Budget {
    pub fn evaluations(n: u64) -> Self {
        Budget {
            wall: None,
            evaluations: Some(n),
        }
    }

    pub fn wall(d: Duration) -> Self {
        Budget {
            wall: Some(d),
            evaluations: None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.wall.is_some() || self.evaluations.is_some()
    }
}

/// Tracks budget consumption against a clock.
pub(crate) struct BudgetTracker<'a> {
    budget: Budget,
    clock: &'a dyn Clock,
    start: Duration,
    used: u64,
}

impl<'a> BudgetTracker<'a> {
    pub(crate) fn new(budget: Budget, clock: &'a dyn Clock) -> Self {
        BudgetTracker {
            budget,
            clock,
            start: clock.now(),
            used: 0,
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.clock.now().saturating_sub(self.start)
    }

    /// Whether another evaluation may start.
    pub(crate) fn allows(&self) -> bool {
        if !self.budget.is_bounded() {
            return false;
        }
        if self.budget.evaluations.is_some_and(|n| self.used >= n) {
            return false;
        }
        !self.budget.wall.is_some_and(|w| self.elapsed() >= w)
    }

    pub(crate) fn consume(&mut self) {
        self.used += 1;
    }

    pub(crate) fn used(&self) -> u64 {
        self.used
    }
}

/// One strict improvement in an optimizer's anytime trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Time since the optimizer started.
    pub elapsed: Duration,
    /// Full pipeline composed from the per-slot incumbents at this point.
    pub pipeline: Pipeline,
    /// Slot whose evaluation triggered the event (absent for joint-space searches).
    pub trigger_slot: Option<usize>,
    /// Component evaluated in the trigger slot (`None` for Blank).
    pub component_id: Option<String>,
    pub params: Params,
    /// Score of the triggering evaluation; equals the new global best.
    pub local_score: f64,
    pub oriented_score: f64,
    /// Mean raw metric value of the triggering evaluation, when available.
    pub raw_score: Option<f64>,
    pub status: EvalStatus,
    /// 1-based index of the triggering evaluation.
    pub evaluation: u64,
}

impl TraceEvent {
    pub(crate) fn from_result(
        elapsed: Duration,
        pipeline: Pipeline,
        trigger_slot: Option<usize>,
        candidate: &Candidate,
        params: Params,
        result: &EvalResult,
        evaluation: u64,
    ) -> Self {
        let score = result.comparable();
        TraceEvent {
            elapsed,
            pipeline,
            trigger_slot,
            component_id: candidate.id().map(str::to_string),
            params,
            local_score: score,
            oriented_score: score,
            raw_score: result.raw_mean(),
            status: result.status,
            evaluation,
        }
    }
}

/// An anytime optimizer.
pub trait Optimizer: Iterator<Item = TraceEvent> {
    /// The pipeline to hand off: the per-slot incumbents for slot-wise searches,
    /// the best evaluated pipeline otherwise.
    fn incumbent(&self) -> Pipeline;

    /// Evaluations performed so far.
    fn evaluations(&self) -> u64;

    /// Remarks about degenerate situations encountered during the run.
    fn notes(&self) -> Vec<String> {
        Vec::new()
    }
}

/// Optimizer names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Naive,
    QuasiNaive,
    Random,
    BruteForce,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Naive => "naive",
            OptimizerKind::QuasiNaive => "quasi-naive",
            OptimizerKind::Random => "random",
            OptimizerKind::BruteForce => "brute-force",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(OptimizerKind::Naive),
            "quasi-naive" => Ok(OptimizerKind::QuasiNaive),
            "random" => Ok(OptimizerKind::Random),
            "brute-force" => Ok(OptimizerKind::BruteForce),
            other => Err(format!(
                "unknown optimizer `{other}` (expected naive, quasi-naive, random or brute-force)"
            )),
        }
    }
}
