use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::compose::{check_permutation, compose_with_decisions, get_pipeline_naive, Candidate, ComposeError};
use super::{Budget, BudgetTracker, Optimizer, TraceEvent};
use crate::evaluation::{Clock, EvalResult, Evaluator, SystemClock};
use crate::space::{sample_params, Catalog, Params, Pipeline, SlotAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Naive,
    Quasi,
}

#[derive(Debug, Clone)]
struct SlotBest {
    choice: Option<Candidate>,
    params: Params,
    score: f64,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    /// Algorithm selection at defaults: position in the slot order, candidate index.
    Select { position: usize, candidate: usize },
    /// Round-robin random search over the chosen components' parameters.
    Tune { position: usize, idle: usize },
    Done,
}

/// The slot-wise optimizer in its naive and quasi-naive forms.
///
/// Phase one visits the slots in order and, per slot, evaluates every candidate
/// at its defaults; a candidate becomes the slot incumbent on strict local
/// improvement, and an event is emitted on strict improvement of the global
/// best. Pre-processor slots also consider Blank, visited first. Phase two then
/// cycles over the slots, sampling one new configuration of each slot's
/// incumbent per round; slots whose incumbent has no parameters are skipped.
///
/// In naive mode, candidates are evaluated in isolation (pre-processors paired
/// with the standard predictor). In quasi-naive mode, the slots decided before
/// the current one are filled with their incumbents at default parameters.
///
/// Phase-one evaluations of identical pipelines are computed once: the Blank
/// candidate therefore reuses the standard-predictor evaluation.
pub struct SlotwiseSearch<'a, E: Evaluator + ?Sized> {
    catalog: &'a Catalog,
    evaluator: &'a E,
    mode: Mode,
    order: Vec<usize>,
    candidates: Vec<Vec<Candidate>>,
    best: Vec<SlotBest>,
    global: f64,
    rng: ChaCha8Rng,
    tracker: BudgetTracker<'a>,
    phase: Phase,
    cache: HashMap<String, EvalResult>,
    phase_one_evaluations: u64,
}

static SYSTEM_CLOCK: std::sync::OnceLock<SystemClock> = std::sync::OnceLock::new();

pub(crate) fn system_clock() -> &'static SystemClock {
    SYSTEM_CLOCK.get_or_init(SystemClock::new)
}

/// Naive slot-wise search with shuffled slot and candidate order.
pub fn naive_automl<'a, E: Evaluator + ?Sized>(
    catalog: &'a Catalog,
    evaluator: &'a E,
    budget: Budget,
    seed: u64,
) -> SlotwiseSearch<'a, E> {
    SlotwiseSearch::naive(catalog, evaluator, budget, seed, system_clock())
}

/// Quasi-naive slot-wise search over the fixed slot order `permutation`.
pub fn quasi_naive_automl<'a, E: Evaluator + ?Sized>(
    catalog: &'a Catalog,
    permutation: &[usize],
    evaluator: &'a E,
    budget: Budget,
    seed: u64,
) -> Result<SlotwiseSearch<'a, E>, ComposeError> {
    SlotwiseSearch::quasi(catalog, permutation, evaluator, budget, seed, system_clock())
}

/// Predictor first, then the pre-processor slots in catalog order.
pub fn default_permutation(catalog: &Catalog) -> Vec<usize> {
    let predictor = catalog.predictor_slot();
    std::iter::once(predictor)
        .chain((0..catalog.slot_count()).filter(|&s| s != predictor))
        .collect()
}

impl<'a, E: Evaluator + ?Sized> SlotwiseSearch<'a, E> {
    pub fn naive(
        catalog: &'a Catalog,
        evaluator: &'a E,
        budget: Budget,
        seed: u64,
        clock: &'a dyn Clock,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..catalog.slot_count()).collect();
        order.shuffle(&mut rng);
        Self::build(catalog, evaluator, Mode::Naive, order, rng, budget, clock)
    }

    pub fn quasi(
        catalog: &'a Catalog,
        permutation: &[usize],
        evaluator: &'a E,
        budget: Budget,
        seed: u64,
        clock: &'a dyn Clock,
    ) -> Result<Self, ComposeError> {
        check_permutation(catalog, permutation)?;
        let rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::build(
            catalog,
            evaluator,
            Mode::Quasi,
            permutation.to_vec(),
            rng,
            budget,
            clock,
        ))
    }

    fn build(
        catalog: &'a Catalog,
        evaluator: &'a E,
        mode: Mode,
        order: Vec<usize>,
        mut rng: ChaCha8Rng,
        budget: Budget,
        clock: &'a dyn Clock,
    ) -> Self {
        let mut candidates = vec![Vec::new(); catalog.slot_count()];
        for &slot in &order {
            let mut ids: Vec<Candidate> = catalog.slots[slot]
                .candidates
                .iter()
                .map(|c| Candidate::component(&c.id))
                .collect();
            ids.shuffle(&mut rng);
            if catalog.is_preprocessor_slot(slot) {
                ids.insert(0, Candidate::Blank);
            }
            candidates[slot] = ids;
        }
        let best = vec![
            SlotBest {
                choice: None,
                params: Params::Defaults,
                score: f64::NEG_INFINITY,
            };
            catalog.slot_count()
        ];
        SlotwiseSearch {
            catalog,
            evaluator,
            mode,
            order,
            candidates,
            best,
            global: f64::NEG_INFINITY,
            rng,
            tracker: BudgetTracker::new(budget, clock),
            phase: Phase::Select {
                position: 0,
                candidate: 0,
            },
            cache: HashMap::new(),
            phase_one_evaluations: 0,
        }
    }

    /// Slot visiting order.
    pub fn slot_order(&self) -> &[usize] {
        &self.order
    }

    /// Distinct evaluations made during algorithm selection.
    pub fn phase_one_evaluations(&self) -> u64 {
        self.phase_one_evaluations
    }

    /// Incumbent choice per slot (`None` if no candidate of the slot succeeded yet).
    pub fn choices(&self) -> Vec<Option<Candidate>> {
        self.best.iter().map(|b| b.choice.clone()).collect()
    }

    /// Best local score per slot.
    pub fn local_scores(&self) -> Vec<f64> {
        self.best.iter().map(|b| b.score).collect()
    }

    pub fn best_score(&self) -> f64 {
        self.global
    }

    fn decided_before(&self, position: usize) -> BTreeMap<usize, Candidate> {
        self.order[..position]
            .iter()
            .map(|&s| (s, self.fallback_choice(s)))
            .collect()
    }

    fn decided_except(&self, slot: usize) -> BTreeMap<usize, Candidate> {
        (0..self.catalog.slot_count())
            .filter(|&s| s != slot)
            .map(|s| (s, self.fallback_choice(s)))
            .collect()
    }

    fn fallback_choice(&self, slot: usize) -> Candidate {
        self.best[slot].choice.clone().unwrap_or_else(|| {
            if self.catalog.is_preprocessor_slot(slot) {
                Candidate::Blank
            } else {
                Candidate::component(&self.catalog.standard_predictor)
            }
        })
    }

    fn selection_pipeline(&self, position: usize, candidate: &Candidate) -> Pipeline {
        let slot = self.order[position];
        match self.mode {
            Mode::Naive => get_pipeline_naive(self.catalog, slot, candidate, Params::Defaults)
                .expect("candidates come from the catalog"),
            Mode::Quasi => compose_with_decisions(
                self.catalog,
                slot,
                candidate,
                Params::Defaults,
                &self.decided_before(position),
            ),
        }
    }

    fn tuning_pipeline(&self, slot: usize, candidate: &Candidate, params: Params) -> Pipeline {
        match self.mode {
            Mode::Naive => get_pipeline_naive(self.catalog, slot, candidate, params)
                .expect("incumbents come from the catalog"),
            Mode::Quasi => compose_with_decisions(
                self.catalog,
                slot,
                candidate,
                params,
                &self.decided_except(slot),
            ),
        }
    }

    fn event(
        &self,
        slot: usize,
        candidate: &Candidate,
        params: Params,
        result: &EvalResult,
    ) -> TraceEvent {
        TraceEvent::from_result(
            self.tracker.elapsed(),
            self.incumbent(),
            Some(slot),
            candidate,
            params,
            result,
            self.tracker.used(),
        )
    }

    /// One phase-one step; returns an event on global improvement.
    fn select_step(&mut self, position: usize, index: usize) -> Option<TraceEvent> {
        let slot = self.order[position];
        let Some(candidate) = self.candidates[slot].get(index).cloned() else {
            self.phase = if position + 1 < self.order.len() {
                Phase::Select {
                    position: position + 1,
                    candidate: 0,
                }
            } else {
                Phase::Tune {
                    position: 0,
                    idle: 0,
                }
            };
            return None;
        };
        let pipeline = self.selection_pipeline(position, &candidate);
        let key = pipeline.key();
        let result = match self.cache.get(&key) {
            Some(r) => r.clone(),
            None => {
                if !self.tracker.allows() {
                    self.phase = Phase::Done;
                    return None;
                }
                self.tracker.consume();
                self.phase_one_evaluations += 1;
                let r = self.evaluator.evaluate(&pipeline);
                self.cache.insert(key, r.clone());
                r
            }
        };
        self.phase = Phase::Select {
            position,
            candidate: index + 1,
        };
        let v = result.comparable();
        if v > self.best[slot].score {
            self.best[slot] = SlotBest {
                choice: Some(candidate.clone()),
                params: Params::Defaults,
                score: v,
            };
            if v > self.global {
                self.global = v;
                return Some(self.event(slot, &candidate, Params::Defaults, &result));
            }
        }
        None
    }

    /// One phase-two step; returns an event on global improvement.
    fn tune_step(&mut self, position: usize, idle: usize) -> Option<TraceEvent> {
        if idle >= self.order.len() {
            // no slot has anything to tune
            self.phase = Phase::Done;
            return None;
        }
        let slot = self.order[position];
        let next = (position + 1) % self.order.len();
        let tunable = match &self.best[slot].choice {
            Some(Candidate::Component(id)) => self
                .catalog
                .candidate(slot, id)
                .filter(|c| !c.params.is_empty())
                .cloned(),
            _ => None,
        };
        let Some(component) = tunable else {
            self.phase = Phase::Tune {
                position: next,
                idle: idle + 1,
            };
            return None;
        };
        if !self.tracker.allows() {
            self.phase = Phase::Done;
            return None;
        }
        self.phase = Phase::Tune {
            position: next,
            idle: 0,
        };
        let params = sample_params(&component, &mut self.rng);
        let candidate = Candidate::component(&component.id);
        let pipeline = self.tuning_pipeline(slot, &candidate, params.clone());
        self.tracker.consume();
        let result = self.evaluator.evaluate(&pipeline);
        let v = result.comparable();
        if v > self.best[slot].score {
            self.best[slot].params = params.clone();
            self.best[slot].score = v;
            if v > self.global {
                self.global = v;
                return Some(self.event(slot, &candidate, params, &result));
            }
        }
        None
    }
}

impl<E: Evaluator + ?Sized> Iterator for SlotwiseSearch<'_, E> {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        loop {
            let event = match self.phase {
                Phase::Select {
                    position,
                    candidate,
                } => self.select_step(position, candidate),
                Phase::Tune { position, idle } => self.tune_step(position, idle),
                Phase::Done => return None,
            };
            if event.is_some() {
                return event;
            }
        }
    }
}

impl<E: Evaluator + ?Sized> Optimizer for SlotwiseSearch<'_, E> {
    /// Per-slot incumbents with their best parameters. Slots without a
    /// successful candidate are Blank, or the standard predictor for the
    /// predictor slot.
    fn incumbent(&self) -> Pipeline {
        Pipeline::new(
            (0..self.catalog.slot_count())
                .map(|s| match &self.best[s].choice {
                    Some(c) => c.assign(self.best[s].params.clone()),
                    None if self.catalog.is_preprocessor_slot(s) => SlotAssignment::Blank,
                    None => SlotAssignment::component(&self.catalog.standard_predictor, Params::Defaults),
                })
                .collect(),
        )
    }

    fn evaluations(&self) -> u64 {
        self.tracker.used()
    }

    fn notes(&self) -> Vec<String> {
        self.best
            .iter()
            .enumerate()
            .filter(|(_, b)| b.choice.is_none())
            .map(|(s, _)| {
                let fallback = if self.catalog.is_preprocessor_slot(s) {
                    "Blank".to_string()
                } else {
                    self.catalog.standard_predictor.clone()
                };
                format!("slot {s}: no candidate evaluated successfully, using {fallback}")
            })
            .collect()
    }
}
