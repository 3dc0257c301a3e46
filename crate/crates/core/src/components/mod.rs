//! Built-in pre-processors and predictors, and pipeline fit/predict.
//!
//! Components are addressed by their `implementation_key`:
//!
//! | key                  | role          | parameters                                       |
//! |----------------------|---------------|--------------------------------------------------|
//! | `min_max_scaler`     | pre-processor | –                                                |
//! | `standard_scaler`    | pre-processor | –                                                |
//! | `variance_threshold` | pre-processor | `threshold` (real)                               |
//! | `pca`                | pre-processor | `n_components` (integer)                         |
//! | `select_percentile`  | pre-processor | `percentile` (real or integer, 0–100]            |
//! | `decision_tree`      | predictor     | `max_depth`, `min_samples_split`, `min_samples_leaf` |
//! | `knn`                | predictor     | `n_neighbors`, `weights` (`uniform`/`distance`)  |
//! | `gaussian_nb`        | predictor     | `var_smoothing`                                  |
//! | `bernoulli_nb`       | predictor     | `alpha`, `binarize`; inputs must lie in [0, 1]   |
//! | `majority`           | predictor     | –                                                |
//!
//! Parameters missing from a catalog entry fall back to the built-in values
//! documented on each component.

mod bayes;
mod knn;
mod preprocess;
mod tree;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::space::{Catalog, ParamValue, Pipeline, SlotAssignment};

pub use bayes::{BernoulliNb, GaussianNb, Majority};
pub use knn::{Knn, KnnWeights};
pub use preprocess::{MinMaxScaler, Pca, SelectPercentile, StandardScaler, VarianceThreshold};
pub use tree::DecisionTree;

pub const MIN_MAX_SCALER: &str = "min_max_scaler";
pub const STANDARD_SCALER: &str = "standard_scaler";
pub const VARIANCE_THRESHOLD: &str = "variance_threshold";
pub const PCA: &str = "pca";
pub const SELECT_PERCENTILE: &str = "select_percentile";
pub const DECISION_TREE: &str = "decision_tree";
pub const KNN: &str = "knn";
pub const GAUSSIAN_NB: &str = "gaussian_nb";
pub const BERNOULLI_NB: &str = "bernoulli_nb";
pub const MAJORITY: &str = "majority";

pub const PREPROCESSOR_KEYS: [&str; 5] = [
    MIN_MAX_SCALER,
    STANDARD_SCALER,
    VARIANCE_THRESHOLD,
    PCA,
    SELECT_PERCENTILE,
];
pub const PREDICTOR_KEYS: [&str; 5] = [DECISION_TREE, KNN, GAUSSIAN_NB, BERNOULLI_NB, MAJORITY];

/// Lower probability bound applied by every predictor before renormalizing.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("component `{component}` incompatible with its input: {reason}")]
    Incompatible { component: String, reason: String },
    #[error("degenerate data for `{component}`: {reason}")]
    Degenerate { component: String, reason: String },
    #[error("input has {got} columns, expected {expected}")]
    WidthMismatch { got: usize, expected: usize },
    #[error("unknown implementation key `{0}`")]
    UnknownImplementation(String),
    #[error("component `{0}` not found in catalog")]
    UnknownComponent(String),
    #[error("training data is empty")]
    EmptyTrainingSet,
    #[error("interrupted before fitting `{0}`")]
    Interrupted(String),
}

impl ComponentError {
    /// Whether removing pre-processors might make the pipeline executable.
    pub fn is_repairable(&self) -> bool {
        matches!(
            self,
            ComponentError::Incompatible { .. } | ComponentError::Degenerate { .. }
        )
    }
}

pub(crate) type Resolved = BTreeMap<String, ParamValue>;

pub(crate) fn real_param(params: &Resolved, name: &str, fallback: f64) -> f64 {
    params.get(name).and_then(ParamValue::as_f64).unwrap_or(fallback)
}

pub(crate) fn int_param(params: &Resolved, name: &str, fallback: i64) -> i64 {
    match params.get(name) {
        Some(ParamValue::Int(i)) => *i,
        Some(ParamValue::Real(x)) => x.round() as i64,
        _ => fallback,
    }
}

pub(crate) fn choice_param<'a>(params: &'a Resolved, name: &str, fallback: &'a str) -> &'a str {
    params
        .get(name)
        .and_then(ParamValue::as_str)
        .unwrap_or(fallback)
}

/// Clips each probability to `[floor, 1 - floor]` and renormalizes the row.
pub(crate) fn finalize_row(row: &mut [f64]) {
    for p in row.iter_mut() {
        *p = if p.is_nan() {
            PROBABILITY_FLOOR
        } else {
            p.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
        };
    }
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
}

/// A fitted pre-processor.
#[derive(Debug, Clone)]
pub enum FittedTransform {
    MinMax(MinMaxScaler),
    Standard(StandardScaler),
    VarianceThreshold(VarianceThreshold),
    Pca(Pca),
    SelectPercentile(SelectPercentile),
}

impl FittedTransform {
    pub fn fit(
        key: &str,
        id: &str,
        params: &Resolved,
        x: ArrayView2<f64>,
        y: &[usize],
    ) -> Result<Self, ComponentError> {
        Ok(match key {
            MIN_MAX_SCALER => FittedTransform::MinMax(MinMaxScaler::fit(x)),
            STANDARD_SCALER => FittedTransform::Standard(StandardScaler::fit(x)),
            VARIANCE_THRESHOLD => FittedTransform::VarianceThreshold(VarianceThreshold::fit(
                id,
                x,
                real_param(params, "threshold", 0.0),
            )?),
            PCA => FittedTransform::Pca(Pca::fit(
                id,
                x,
                int_param(params, "n_components", x.ncols() as i64).max(1) as usize,
            )?),
            SELECT_PERCENTILE => FittedTransform::SelectPercentile(SelectPercentile::fit(
                x,
                y,
                real_param(params, "percentile", 10.0),
            )),
            other => return Err(ComponentError::UnknownImplementation(other.to_string())),
        })
    }

    pub fn input_width(&self) -> usize {
        match self {
            FittedTransform::MinMax(t) => t.min.len(),
            FittedTransform::Standard(t) => t.mean.len(),
            FittedTransform::VarianceThreshold(t) => t.input_width,
            FittedTransform::Pca(t) => t.mean.len(),
            FittedTransform::SelectPercentile(t) => t.input_width,
        }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, ComponentError> {
        check_width(x, self.input_width())?;
        Ok(match self {
            FittedTransform::MinMax(t) => t.transform(x),
            FittedTransform::Standard(t) => t.transform(x),
            FittedTransform::VarianceThreshold(t) => t.transform(x),
            FittedTransform::Pca(t) => t.transform(x),
            FittedTransform::SelectPercentile(t) => t.transform(x),
        })
    }
}

/// A fitted predictor producing class-probability rows.
#[derive(Debug, Clone)]
pub enum FittedPredictor {
    Tree(DecisionTree),
    Knn(Knn),
    GaussianNb(GaussianNb),
    BernoulliNb(BernoulliNb),
    Majority(Majority),
}

impl FittedPredictor {
    pub fn fit(
        key: &str,
        id: &str,
        params: &Resolved,
        x: ArrayView2<f64>,
        y: &[usize],
        class_count: usize,
    ) -> Result<Self, ComponentError> {
        Ok(match key {
            DECISION_TREE => FittedPredictor::Tree(DecisionTree::fit(
                x,
                y,
                class_count,
                tree::TreeParams::from_resolved(params),
            )),
            KNN => FittedPredictor::Knn(Knn::fit(
                x,
                y,
                class_count,
                int_param(params, "n_neighbors", 5).max(1) as usize,
                match choice_param(params, "weights", "uniform") {
                    "distance" => KnnWeights::Distance,
                    _ => KnnWeights::Uniform,
                },
            )),
            GAUSSIAN_NB => FittedPredictor::GaussianNb(GaussianNb::fit(
                x,
                y,
                class_count,
                real_param(params, "var_smoothing", 1e-9),
            )),
            BERNOULLI_NB => FittedPredictor::BernoulliNb(BernoulliNb::fit(
                id,
                x,
                y,
                class_count,
                real_param(params, "alpha", 1.0),
                real_param(params, "binarize", 0.5),
            )?),
            MAJORITY => FittedPredictor::Majority(Majority::fit(y, class_count)),
            other => return Err(ComponentError::UnknownImplementation(other.to_string())),
        })
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        match self {
            FittedPredictor::Tree(p) => p.predict_proba(x),
            FittedPredictor::Knn(p) => p.predict_proba(x),
            FittedPredictor::GaussianNb(p) => p.predict_proba(x),
            FittedPredictor::BernoulliNb(p) => p.predict_proba(x),
            FittedPredictor::Majority(p) => p.predict_proba(x),
        }
    }
}

fn check_width(x: ArrayView2<f64>, expected: usize) -> Result<(), ComponentError> {
    if x.ncols() == expected {
        Ok(())
    } else {
        Err(ComponentError::WidthMismatch {
            got: x.ncols(),
            expected,
        })
    }
}

/// A fitted chain: pre-processors (Blank slots omitted) followed by a predictor.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub steps: Vec<(String, FittedTransform)>,
    pub predictor: (String, FittedPredictor),
    input_width: usize,
    class_count: usize,
}

impl FittedPipeline {
    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Probability matrix (rows × classes); class order follows the dataset's
    /// label indexing.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, ComponentError> {
        check_width(x, self.input_width)?;
        let mut current: Option<Array2<f64>> = None;
        for (_, step) in &self.steps {
            let next = step.transform(current.as_ref().map_or(x, |c| c.view()))?;
            current = Some(next);
        }
        Ok(self
            .predictor
            .1
            .predict_proba(current.as_ref().map_or(x, |c| c.view())))
    }

    /// Features after all pre-processors.
    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, ComponentError> {
        check_width(x, self.input_width)?;
        let mut current = x.to_owned();
        for (_, step) in &self.steps {
            current = step.transform(current.view())?;
        }
        Ok(current)
    }
}

/// Fits `pipeline` left to right on `train`.
pub fn fit_pipeline(
    pipeline: &Pipeline,
    catalog: &Catalog,
    train: &Dataset,
) -> Result<FittedPipeline, ComponentError> {
    fit_pipeline_checked(pipeline, catalog, train, &|| false)
}

/// Like [`fit_pipeline`], calling `expired` before each component fit and
/// aborting with [`ComponentError::Interrupted`] when it returns true.
pub fn fit_pipeline_checked(
    pipeline: &Pipeline,
    catalog: &Catalog,
    train: &Dataset,
    expired: &dyn Fn() -> bool,
) -> Result<FittedPipeline, ComponentError> {
    if train.is_empty() {
        return Err(ComponentError::EmptyTrainingSet);
    }
    let y = train.labels();
    let mut x = train.features().clone();
    let mut steps = Vec::new();
    let mut predictor = None;
    for (si, assignment) in pipeline.slots.iter().enumerate() {
        let SlotAssignment::Component(choice) = assignment else {
            continue;
        };
        let spec = catalog
            .candidate(si, &choice.id)
            .ok_or_else(|| ComponentError::UnknownComponent(choice.id.clone()))?;
        if expired() {
            return Err(ComponentError::Interrupted(choice.id.clone()));
        }
        let params = spec.resolve(&choice.params);
        if catalog.is_preprocessor_slot(si) {
            let step =
                FittedTransform::fit(&spec.implementation_key, &spec.id, &params, x.view(), y)?;
            x = step.transform(x.view())?;
            if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(ComponentError::Degenerate {
                    component: spec.id.clone(),
                    reason: format!("non-finite output at ({r}, {c})"),
                });
            }
            steps.push((spec.id.clone(), step));
        } else {
            predictor = Some((
                spec.id.clone(),
                FittedPredictor::fit(
                    &spec.implementation_key,
                    &spec.id,
                    &params,
                    x.view(),
                    y,
                    train.class_count(),
                )?,
            ));
        }
    }
    let predictor = predictor.ok_or_else(|| ComponentError::UnknownComponent("<blank predictor>".into()))?;
    Ok(FittedPipeline {
        steps,
        predictor,
        input_width: train.width(),
        class_count: train.class_count(),
    })
}

/// Probability matrix of a fitted pipeline on raw features.
pub fn predict_proba(
    fitted: &FittedPipeline,
    x: ArrayView2<f64>,
) -> Result<Array2<f64>, ComponentError> {
    fitted.predict_proba(x)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Whether every key in `catalog` names a built-in component of the right role.
pub fn check_implementations(catalog: &Catalog) -> Result<(), ComponentError> {
    for slot in &catalog.slots {
        let known: &[&str] = if slot.role.is_preprocessor() {
            &PREPROCESSOR_KEYS
        } else {
            &PREDICTOR_KEYS
        };
        for c in &slot.candidates {
            if !known.contains(&c.implementation_key.as_str()) {
                return Err(ComponentError::UnknownImplementation(
                    c.implementation_key.clone(),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;

/// The bundled catalog over all built-in components, with a decision tree as
/// the standard predictor.
pub fn builtin_catalog() -> Catalog {
    use crate::space::{ComponentSpec as C, ParamSpec as P, Slot, SlotRole};
    Catalog {
        slots: vec![
            Slot {
                role: SlotRole::DataPreprocessor,
                candidates: vec![
                    C::new("min_max_scaler", MIN_MAX_SCALER, vec![]),
                    C::new("standard_scaler", STANDARD_SCALER, vec![]),
                    C::new(
                        "variance_threshold",
                        VARIANCE_THRESHOLD,
                        vec![P::real("threshold", 0.0, 0.2, 0.0)],
                    ),
                ],
            },
            Slot {
                role: SlotRole::FeaturePreprocessor,
                candidates: vec![
                    C::new("pca", PCA, vec![P::integer("n_components", 1, 10, 2)]),
                    C::new(
                        "select_percentile",
                        SELECT_PERCENTILE,
                        vec![P::integer("percentile", 1, 99, 10)],
                    ),
                ],
            },
            Slot {
                role: SlotRole::Predictor,
                candidates: vec![
                    C::new(
                        "decision_tree",
                        DECISION_TREE,
                        vec![
                            P::integer("max_depth", 1, 30, 30),
                            P::integer("min_samples_split", 2, 20, 2),
                            P::integer("min_samples_leaf", 1, 20, 1),
                        ],
                    ),
                    C::new(
                        "knn",
                        KNN,
                        vec![
                            P::integer("n_neighbors", 1, 50, 5),
                            P::categorical("weights", &["uniform", "distance"], "uniform"),
                        ],
                    ),
                    C::new(
                        "gaussian_nb",
                        GAUSSIAN_NB,
                        vec![P::log_real("var_smoothing", 1e-12, 1e-1, 1e-9)],
                    ),
                    C::new(
                        "bernoulli_nb",
                        BERNOULLI_NB,
                        vec![
                            P::log_real("alpha", 1e-3, 100.0, 1.0),
                            P::real("binarize", 0.0, 1.0, 0.5),
                        ],
                    ),
                    C::new("majority", MAJORITY, vec![]),
                ],
            },
        ],
        standard_predictor: "decision_tree".to_string(),
    }
}
