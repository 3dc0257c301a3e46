use std::collections::BTreeMap;

use thiserror::Error;

use crate::space::{Catalog, Params, Pipeline, SlotAssignment};

/// A value a slot can take: a catalog component or, for pre-processor slots,
/// the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Candidate {
    Blank,
    Component(String),
}

impl Candidate {
    pub fn component(id: &str) -> Self {
        Candidate::Component(id.to_string())
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            Candidate::Blank => None,
            Candidate::Component(id) => Some(id),
        }
    }

    pub(crate) fn assign(&self, params: Params) -> SlotAssignment {
        match self {
            Candidate::Blank => SlotAssignment::Blank,
            Candidate::Component(id) => SlotAssignment::component(id, params),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("slot {0} does not exist")]
    NoSuchSlot(usize),
    #[error("`{id}` is not a candidate of slot {slot}")]
    NotInSlot { slot: usize, id: String },
    #[error("the predictor slot cannot be blank")]
    BlankPredictor,
    #[error("slot order is not a permutation of the catalog slots")]
    InvalidPermutation,
    #[error("decided slots {decided:?} do not match the slots before {slot} in the order ({expected:?})")]
    InconsistentDecisions {
        slot: usize,
        decided: Vec<usize>,
        expected: Vec<usize>,
    },
}

fn check_candidate(catalog: &Catalog, slot: usize, candidate: &Candidate) -> Result<(), ComposeError> {
    if slot >= catalog.slot_count() {
        return Err(ComposeError::NoSuchSlot(slot));
    }
    match candidate {
        Candidate::Blank if !catalog.is_preprocessor_slot(slot) => Err(ComposeError::BlankPredictor),
        Candidate::Blank => Ok(()),
        Candidate::Component(id) => catalog
            .candidate(slot, id)
            .map(|_| ())
            .ok_or_else(|| ComposeError::NotInSlot {
                slot,
                id: id.clone(),
            }),
    }
}

/// The pipeline that evaluates `candidate` in isolation: alone if it is a
/// predictor, followed by the standard predictor (defaults) otherwise. All
/// other slots are Blank.
pub fn get_pipeline_naive(
    catalog: &Catalog,
    slot: usize,
    candidate: &Candidate,
    params: Params,
) -> Result<Pipeline, ComposeError> {
    check_candidate(catalog, slot, candidate)?;
    let mut p = Pipeline::predictor_only(catalog, &catalog.standard_predictor, Params::Defaults);
    p.slots[slot] = candidate.assign(params);
    Ok(p)
}

/// Places `candidate` in `slot`, every slot in `decided` at its chosen
/// component with default parameters, and leaves the remaining slots Blank.
/// An undecided predictor slot falls back to the standard predictor.
pub(crate) fn compose_with_decisions(
    catalog: &Catalog,
    slot: usize,
    candidate: &Candidate,
    params: Params,
    decided: &BTreeMap<usize, Candidate>,
) -> Pipeline {
    let predictor = catalog.predictor_slot();
    let mut p = Pipeline::new(
        (0..catalog.slot_count())
            .map(|s| match decided.get(&s) {
                Some(c) => c.assign(Params::Defaults),
                None if s == predictor => {
                    SlotAssignment::component(&catalog.standard_predictor, Params::Defaults)
                }
                None => SlotAssignment::Blank,
            })
            .collect(),
    );
    p.slots[slot] = candidate.assign(params);
    p
}

pub(crate) fn check_permutation(catalog: &Catalog, order: &[usize]) -> Result<(), ComposeError> {
    let mut seen = vec![false; catalog.slot_count()];
    if order.len() != seen.len() {
        return Err(ComposeError::InvalidPermutation);
    }
    for &s in order {
        if s >= seen.len() || std::mem::replace(&mut seen[s], true) {
            return Err(ComposeError::InvalidPermutation);
        }
    }
    Ok(())
}

/// The quasi-naive pipeline for `candidate` in `slot`: slots decided earlier in
/// `order` hold their chosen component at defaults, later slots stay Blank.
///
/// `decided` must contain exactly the slots that precede `slot` in `order`.
pub fn get_pipeline_quasi(
    catalog: &Catalog,
    order: &[usize],
    slot: usize,
    candidate: &Candidate,
    params: Params,
    decided: &BTreeMap<usize, Candidate>,
) -> Result<Pipeline, ComposeError> {
    check_permutation(catalog, order)?;
    check_candidate(catalog, slot, candidate)?;
    let position = order
        .iter()
        .position(|&s| s == slot)
        .ok_or(ComposeError::NoSuchSlot(slot))?;
    let mut expected: Vec<usize> = order[..position].to_vec();
    expected.sort_unstable();
    let got: Vec<usize> = decided.keys().copied().collect();
    if got != expected {
        return Err(ComposeError::InconsistentDecisions {
            slot,
            decided: got,
            expected,
        });
    }
    for (&s, c) in decided {
        check_candidate(catalog, s, c)?;
    }
    Ok(compose_with_decisions(catalog, slot, candidate, params, decided))
}
