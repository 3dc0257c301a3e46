//! Slot-wise pipeline optimization.
//!
//! A pipeline is a chain of pre-processors followed by a predictor. The search
//! space is described by a [`Catalog`]: an ordered list of slots, each with a set
//! of candidate components and their hyperparameter spaces.
//!
//! The crate provides:
//!
//! - the naive and quasi-naive slot-wise optimizers ([`optimizers::naive_automl`],
//!   [`optimizers::quasi_naive_automl`]), a joint random search baseline and an
//!   exhaustive oracle,
//! - a small set of executable components and a cross-validated evaluation
//!   function,
//! - synthetic performance surfaces with controllable slot interactions,
//! - a benchmark harness with anytime analyses (gaps, ranks, duels).
//!
//! Data-parallel loops (exhaustive enumeration, independent benchmark runs) use
//! rayon when the `parallel` feature is enabled and fall back to sequential
//! iteration otherwise; see [`Execution`].

pub mod components;
pub mod dataset;
pub mod evaluation;
mod exec;
pub mod harness;
pub mod optimizers;
pub mod space;
pub mod surrogate;

pub use dataset::{Dataset, DatasetError, TaskKind};
pub use exec::Execution;
pub use space::{
    Catalog, ComponentSpec, ParamKind, ParamSpec, ParamValue, Params, Pipeline, SlotAssignment,
    SlotRole,
};
