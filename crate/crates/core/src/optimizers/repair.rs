use thiserror::Error;

use crate::components::fit_pipeline;
use crate::dataset::Dataset;
use crate::space::{Catalog, Pipeline, SlotAssignment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepairError {
    #[error("no executable pipeline left after removing every pre-processor ({probe_calls} probes)")]
    Exhausted { probe_calls: usize },
    #[error("pipeline has no predictor")]
    NoPredictor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repaired {
    pub pipeline: Pipeline,
    pub probe_calls: usize,
    /// Slots blanked, in removal order.
    pub removed: Vec<usize>,
}

/// Blanks pre-processors left to right until `probe` accepts the pipeline.
///
/// Already-blank slots are not probed again, so the probe runs at most once
/// more than the number of populated pre-processor slots.
pub fn repair<P>(pipeline: &Pipeline, catalog: &Catalog, mut probe: P) -> Result<Repaired, RepairError>
where
    P: FnMut(&Pipeline) -> bool,
{
    let predictor = catalog.predictor_slot();
    if pipeline.slots.get(predictor).and_then(SlotAssignment::id).is_none() {
        return Err(RepairError::NoPredictor);
    }
    let mut current = pipeline.clone();
    let mut probe_calls = 1;
    let mut removed = Vec::new();
    if probe(&current) {
        return Ok(Repaired {
            pipeline: current,
            probe_calls,
            removed,
        });
    }
    for slot in 0..current.slots.len() {
        if slot == predictor || current.slots[slot] == SlotAssignment::Blank {
            continue;
        }
        current.slots[slot] = SlotAssignment::Blank;
        removed.push(slot);
        probe_calls += 1;
        if probe(&current) {
            return Ok(Repaired {
                pipeline: current,
                probe_calls,
                removed,
            });
        }
    }
    Err(RepairError::Exhausted { probe_calls })
}

/// A probe that accepts a pipeline iff it fits on `train`.
pub fn fit_probe<'a>(catalog: &'a Catalog, train: &'a Dataset) -> impl FnMut(&Pipeline) -> bool + 'a {
    move |p| fit_pipeline(p, catalog, train).is_ok()
}
