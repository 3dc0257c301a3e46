use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::compose::Candidate;
use super::slotwise::system_clock;
use super::{Budget, BudgetTracker, Optimizer, TraceEvent};
use crate::evaluation::{Clock, Evaluator};
use crate::space::{sample_params, Catalog, Params, Pipeline, SlotAssignment};

/// Random search in the joint space. Each draw picks, per pre-processor slot,
/// Blank or one of the candidates uniformly; a uniform predictor; and for each
/// chosen component either its defaults or a random configuration with equal
/// probability.
pub struct RandomSearch<'a, E: Evaluator + ?Sized> {
    catalog: &'a Catalog,
    evaluator: &'a E,
    rng: ChaCha8Rng,
    tracker: BudgetTracker<'a>,
    best: Option<Pipeline>,
    best_score: f64,
}

pub fn random_search<'a, E: Evaluator + ?Sized>(
    catalog: &'a Catalog,
    evaluator: &'a E,
    budget: Budget,
    seed: u64,
) -> RandomSearch<'a, E> {
    RandomSearch::new(catalog, evaluator, budget, seed, system_clock())
}

impl<'a, E: Evaluator + ?Sized> RandomSearch<'a, E> {
    pub fn new(
        catalog: &'a Catalog,
        evaluator: &'a E,
        budget: Budget,
        seed: u64,
        clock: &'a dyn Clock,
    ) -> Self {
        RandomSearch {
            catalog,
            evaluator,
            rng: ChaCha8Rng::seed_from_u64(seed),
            tracker: BudgetTracker::new(budget, clock),
            best: None,
            best_score: f64::NEG_INFINITY,
        }
    }

    fn draw(&mut self) -> Pipeline {
        let mut slots = Vec::with_capacity(self.catalog.slot_count());
        for slot in &self.catalog.slots {
            let blank = usize::from(slot.role.is_preprocessor());
            let pick = self.rng.gen_range(0..slot.candidates.len() + blank);
            if pick < blank {
                slots.push(SlotAssignment::Blank);
                continue;
            }
            let component = &slot.candidates[pick - blank];
            let params = if component.params.is_empty() || self.rng.gen_bool(0.5) {
                Params::Defaults
            } else {
                sample_params(component, &mut self.rng)
            };
            slots.push(SlotAssignment::component(&component.id, params));
        }
        Pipeline::new(slots)
    }

    pub fn best_score(&self) -> f64 {
        self.best_score
    }
}

impl<E: Evaluator + ?Sized> Iterator for RandomSearch<'_, E> {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        while self.tracker.allows() {
            let pipeline = self.draw();
            self.tracker.consume();
            let result = self.evaluator.evaluate(&pipeline);
            let v = result.comparable();
            if v > self.best_score {
                self.best_score = v;
                self.best = Some(pipeline.clone());
                let predictor = &pipeline.slots[self.catalog.predictor_slot()];
                let candidate = predictor.id().map_or(Candidate::Blank, Candidate::component);
                let params = predictor.params().cloned().unwrap_or_default();
                return Some(TraceEvent::from_result(
                    self.tracker.elapsed(),
                    pipeline,
                    None,
                    &candidate,
                    params,
                    &result,
                    self.tracker.used(),
                ));
            }
        }
        None
    }
}

impl<E: Evaluator + ?Sized> Optimizer for RandomSearch<'_, E> {
    fn incumbent(&self) -> Pipeline {
        self.best.clone().unwrap_or_else(|| {
            Pipeline::predictor_only(self.catalog, &self.catalog.standard_predictor, Params::Defaults)
        })
    }

    fn evaluations(&self) -> u64 {
        self.tracker.used()
    }
}
