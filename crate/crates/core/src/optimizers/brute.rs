use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::compose::Candidate;
use super::{Budget, BudgetTracker, Optimizer, TraceEvent};
use crate::evaluation::{Clock, EvalResult, Evaluator};
use crate::exec::Execution;
use crate::space::{Catalog, Params, Pipeline, SlotRole};

pub const DEFAULT_SPACE_CAP: u128 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceOptions {
    /// Largest number of pipelines that may be enumerated.
    pub cap: u128,
    /// Enumerate parameterized components at their defaults instead of refusing.
    pub defaults_only: bool,
    pub execution: Execution,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions {
            cap: DEFAULT_SPACE_CAP,
            defaults_only: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BruteForceError {
    #[error("search space has {size} pipelines, more than the cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },
    #[error("component `{0}` has parameters; enumerate at defaults to include it")]
    HasParameters(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub pipeline: Pipeline,
    pub score: f64,
    pub evaluations: u64,
}

/// The values of every slot in enumeration order: Blank first for
/// pre-processor slots, then catalog order.
fn slot_values(catalog: &Catalog) -> Vec<Vec<Candidate>> {
    catalog
        .slots
        .iter()
        .map(|slot| {
            let blank = slot.role.is_preprocessor().then_some(Candidate::Blank);
            blank
                .into_iter()
                .chain(slot.candidates.iter().map(|c| Candidate::component(&c.id)))
                .collect()
        })
        .collect()
}

fn check_space(catalog: &Catalog, options: &BruteForceOptions) -> Result<(), BruteForceError> {
    let size = catalog.space_size();
    if size > options.cap {
        return Err(BruteForceError::SpaceTooLarge {
            size,
            cap: options.cap,
        });
    }
    if !options.defaults_only {
        if let Some(c) = catalog
            .slots
            .iter()
            .flat_map(|s| &s.candidates)
            .find(|c| !c.params.is_empty())
        {
            return Err(BruteForceError::HasParameters(c.id.clone()));
        }
    }
    Ok(())
}

/// Mixed-radix enumeration of the pipeline space, slot 0 most significant.
struct Space {
    values: Vec<Vec<Candidate>>,
}

impl Space {
    fn new(catalog: &Catalog) -> Self {
        Space {
            values: slot_values(catalog),
        }
    }

    fn len(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.values.len()];
        for (s, values) in self.values.iter().enumerate().rev() {
            digits[s] = index % values.len();
            index /= values.len();
        }
        digits
    }

    fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.values)
            .fold(0, |acc, (&d, values)| acc * values.len() + d)
    }

    fn pipeline(&self, digits: &[usize]) -> Pipeline {
        Pipeline::new(
            digits
                .iter()
                .zip(&self.values)
                .map(|(&d, values)| values[d].assign(Params::Defaults))
                .collect(),
        )
    }
}

fn score_table<E: Evaluator + ?Sized>(space: &Space, evaluator: &E, execution: Execution) -> Vec<f64> {
    execution.map_range(space.len(), |i| {
        evaluator.evaluate(&space.pipeline(&space.digits(i))).comparable()
    })
}

/// Evaluates every pipeline of a parameterless catalog and returns the best,
/// its score and the number of evaluations.
pub fn brute_force<E: Evaluator + ?Sized>(
    catalog: &Catalog,
    evaluator: &E,
) -> Result<(Pipeline, f64, u64), BruteForceError> {
    let r = brute_force_with(catalog, evaluator, &BruteForceOptions::default())?;
    Ok((r.pipeline, r.score, r.evaluations))
}

/// Exhaustive search; ties go to the earliest pipeline in enumeration order.
pub fn brute_force_with<E: Evaluator + ?Sized>(
    catalog: &Catalog,
    evaluator: &E,
    options: &BruteForceOptions,
) -> Result<BruteForceResult, BruteForceError> {
    check_space(catalog, options)?;
    let space = Space::new(catalog);
    let scores = score_table(&space, evaluator, options.execution);
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = i;
        }
    }
    Ok(BruteForceResult {
        pipeline: space.pipeline(&space.digits(best)),
        score: scores[best],
        evaluations: scores.len() as u64,
    })
}

/// Naivety diagnostic for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotViolation {
    pub slot: usize,
    pub role: SlotRole,
    /// Whether the slot's best value depends on the other slots.
    pub violated: bool,
    /// Two pipelines, each holding the slot's best value under its context,
    /// whose best values differ. Empty when not violated.
    pub witnesses: Vec<Pipeline>,
}

/// For every slot, checks whether its best value (first in enumeration order
/// on ties) is the same under every assignment of the other slots.
pub fn naivety_violation<E: Evaluator + ?Sized>(
    catalog: &Catalog,
    evaluator: &E,
    options: &BruteForceOptions,
) -> Result<Vec<SlotViolation>, BruteForceError> {
    check_space(catalog, options)?;
    let space = Space::new(catalog);
    let scores = score_table(&space, evaluator, options.execution);
    let report = (0..space.values.len())
        .map(|slot| {
            let mut first: Option<Vec<usize>> = None;
            let mut witnesses = Vec::new();
            for i in 0..space.len() {
                let mut digits = space.digits(i);
                if digits[slot] != 0 {
                    continue;
                }
                let mut best = 0;
                for d in 1..space.values[slot].len() {
                    digits[slot] = d;
                    let v = scores[space.index(&digits)];
                    digits[slot] = best;
                    if v > scores[space.index(&digits)] {
                        best = d;
                    }
                }
                digits[slot] = best;
                match &first {
                    None => first = Some(digits),
                    Some(f) if f[slot] != best && witnesses.is_empty() => {
                        witnesses = vec![space.pipeline(f), space.pipeline(&digits)];
                    }
                    Some(_) => {}
                }
            }
            SlotViolation {
                slot,
                role: catalog.slots[slot].role,
                violated: !witnesses.is_empty(),
                witnesses,
            }
        })
        .collect();
    Ok(report)
}

/// Budgeted, sequential enumeration as an anytime stream.
pub struct BruteForceSearch<'a, E: Evaluator + ?Sized> {
    catalog: &'a Catalog,
    evaluator: &'a E,
    space: Space,
    next: usize,
    tracker: BudgetTracker<'a>,
    best: Option<Pipeline>,
    best_score: f64,
}

impl<'a, E: Evaluator + ?Sized> BruteForceSearch<'a, E> {
    pub fn new(
        catalog: &'a Catalog,
        evaluator: &'a E,
        budget: Budget,
        options: &BruteForceOptions,
        clock: &'a dyn Clock,
    ) -> Result<Self, BruteForceError> {
        check_space(catalog, options)?;
        Ok(BruteForceSearch {
            catalog,
            evaluator,
            space: Space::new(catalog),
            next: 0,
            tracker: BudgetTracker::new(budget, clock),
            best: None,
            best_score: f64::NEG_INFINITY,
        })
    }

    fn improved(&mut self, pipeline: Pipeline, result: &EvalResult) -> TraceEvent {
        let predictor = &pipeline.slots[self.catalog.predictor_slot()];
        let candidate = predictor.id().map_or(Candidate::Blank, Candidate::component);
        self.best = Some(pipeline.clone());
        TraceEvent::from_result(
            self.tracker.elapsed(),
            pipeline,
            None,
            &candidate,
            Params::Defaults,
            result,
            self.tracker.used(),
        )
    }
}

impl<E: Evaluator + ?Sized> Iterator for BruteForceSearch<'_, E> {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        while self.next < self.space.len() && self.tracker.allows() {
            let pipeline = self.space.pipeline(&self.space.digits(self.next));
            self.next += 1;
            self.tracker.consume();
            let result = self.evaluator.evaluate(&pipeline);
            if result.comparable() > self.best_score {
                self.best_score = result.comparable();
                return Some(self.improved(pipeline, &result));
            }
        }
        None
    }
}

impl<E: Evaluator + ?Sized> Optimizer for BruteForceSearch<'_, E> {
    fn incumbent(&self) -> Pipeline {
        self.best.clone().unwrap_or_else(|| {
            Pipeline::predictor_only(self.catalog, &self.catalog.standard_predictor, Params::Defaults)
        })
    }

    fn evaluations(&self) -> u64 {
        self.tracker.used()
    }
}
