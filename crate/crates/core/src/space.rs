//! The pipeline search space: slots, candidate components, hyperparameter
//! domains, and concrete pipelines drawn from it.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotRole {
    DataPreprocessor,
    FeaturePreprocessor,
    Predictor,
}

impl SlotRole {
    pub fn is_preprocessor(self) -> bool {
        !matches!(self, SlotRole::Predictor)
    }
}

impl fmt::Display for SlotRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlotRole::DataPreprocessor => "data_preprocessor",
            SlotRole::FeaturePreprocessor => "feature_preprocessor",
            SlotRole::Predictor => "predictor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Real,
    Integer,
    Categorical,
}

/// A concrete hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(i) => Some(i as f64),
            ParamValue::Real(x) => Some(x),
            ParamValue::Choice(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            ParamValue::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Choice(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Choice(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default)]
    pub log_scale: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default)]
    pub default: Option<ParamValue>,
}

impl ParamSpec {
    pub fn real(name: &str, lo: f64, hi: f64, default: f64) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Real,
            lo: Some(lo),
            hi: Some(hi),
            log_scale: false,
            choices: None,
            default: Some(ParamValue::Real(default)),
        }
    }

    pub fn log_real(name: &str, lo: f64, hi: f64, default: f64) -> Self {
        ParamSpec {
            log_scale: true,
            ..Self::real(name, lo, hi, default)
        }
    }

    pub fn integer(name: &str, lo: i64, hi: i64, default: i64) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Integer,
            lo: Some(lo as f64),
            hi: Some(hi as f64),
            log_scale: false,
            choices: None,
            default: Some(ParamValue::Int(default)),
        }
    }

    pub fn categorical(name: &str, choices: &[&str], default: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Categorical,
            lo: None,
            hi: None,
            log_scale: false,
            choices: Some(choices.iter().map(|c| c.to_string()).collect()),
            default: Some(ParamValue::Choice(default.to_string())),
        }
    }

    /// Whether `value` lies in this parameter's domain.
    pub fn contains(&self, value: &ParamValue) -> bool {
        match self.kind {
            ParamKind::Real => match (value.as_f64(), self.lo, self.hi) {
                (Some(x), Some(lo), Some(hi)) => x.is_finite() && lo <= x && x <= hi,
                _ => false,
            },
            ParamKind::Integer => match (value.as_i64(), self.lo, self.hi) {
                (Some(i), Some(lo), Some(hi)) => lo <= i as f64 && i as f64 <= hi,
                _ => false,
            },
            ParamKind::Categorical => match (value.as_str(), &self.choices) {
                (Some(s), Some(choices)) => choices.iter().any(|c| c == s),
                _ => false,
            },
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.kind {
            ParamKind::Real | ParamKind::Integer => match (self.lo, self.hi) {
                (Some(lo), Some(hi)) => {
                    if !(lo.is_finite() && hi.is_finite()) {
                        out.push("bounds must be finite".to_string());
                    } else if lo > hi {
                        out.push(format!("lower bound {lo} exceeds upper bound {hi}"));
                    }
                    if self.kind == ParamKind::Integer && (lo.fract() != 0.0 || hi.fract() != 0.0) {
                        out.push("integer bounds must be integral".to_string());
                    }
                    if self.log_scale && lo <= 0.0 {
                        out.push(format!("log-scale parameter requires lo > 0, got {lo}"));
                    }
                }
                _ => out.push("numeric parameter requires both lo and hi".to_string()),
            },
            ParamKind::Categorical => {
                if self.choices.as_ref().is_none_or(|c| c.is_empty()) {
                    out.push("categorical parameter requires a non-empty choice list".to_string());
                }
            }
        }
        if self.log_scale && self.kind != ParamKind::Real {
            out.push("log_scale is only allowed for real parameters".to_string());
        }
        match &self.default {
            None => out.push("no default declared".to_string()),
            Some(d) if out.is_empty() && !self.contains(d) => {
                out.push(format!("default {d} outside the declared domain"))
            }
            _ => {}
        }
        out
    }

    /// Draws a value: uniform on the range (log-uniform when `log_scale`),
    /// inclusive integer range, or a uniform choice.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match self.kind {
            ParamKind::Real => {
                let (lo, hi) = (self.lo.unwrap_or(0.0), self.hi.unwrap_or(0.0));
                if lo >= hi {
                    return ParamValue::Real(lo);
                }
                let x = if self.log_scale {
                    rng.gen_range(lo.ln()..=hi.ln()).exp()
                } else {
                    rng.gen_range(lo..=hi)
                };
                ParamValue::Real(x.clamp(lo, hi))
            }
            ParamKind::Integer => {
                let (lo, hi) = (self.lo.unwrap_or(0.0) as i64, self.hi.unwrap_or(0.0) as i64);
                ParamValue::Int(if lo >= hi { lo } else { rng.gen_range(lo..=hi) })
            }
            ParamKind::Categorical => {
                let choices = self.choices.as_deref().unwrap_or_default();
                let i = rng.gen_range(0..choices.len().max(1));
                ParamValue::Choice(choices.get(i).cloned().unwrap_or_default())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    pub implementation_key: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
}

impl ComponentSpec {
    pub fn new(id: &str, implementation_key: &str, params: Vec<ParamSpec>) -> Self {
        ComponentSpec {
            id: id.to_string(),
            implementation_key: implementation_key.to_string(),
            params,
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Effective values: declared defaults overlaid with any explicit values.
    pub fn resolve(&self, params: &Params) -> BTreeMap<String, ParamValue> {
        let mut out = default_params(self).into_values();
        if let Params::Values(values) = params {
            for (k, v) in values {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }
}

/// Each parameter's declared default.
pub fn default_params(component: &ComponentSpec) -> Params {
    Params::Values(
        component
            .params
            .iter()
            .filter_map(|p| p.default.clone().map(|d| (p.name.clone(), d)))
            .collect(),
    )
}

/// A random configuration for `component`; a pure function of the rng state.
pub fn sample_params<R: Rng + ?Sized>(component: &ComponentSpec, rng: &mut R) -> Params {
    Params::Values(
        component
            .params
            .iter()
            .map(|p| (p.name.clone(), p.sample(rng)))
            .collect(),
    )
}

/// Parameter assignment of a pipeline slot. `Defaults` is the explicit
/// "use the declared defaults" marker; it serializes as `null`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Option<BTreeMap<String, ParamValue>>", into = "Option<BTreeMap<String, ParamValue>>")]
pub enum Params {
    #[default]
    Defaults,
    Values(BTreeMap<String, ParamValue>),
}

impl Params {
    pub fn is_defaults(&self) -> bool {
        matches!(self, Params::Defaults)
    }

    pub fn into_values(self) -> BTreeMap<String, ParamValue> {
        match self {
            Params::Defaults => BTreeMap::new(),
            Params::Values(v) => v,
        }
    }
}

impl From<Option<BTreeMap<String, ParamValue>>> for Params {
    fn from(v: Option<BTreeMap<String, ParamValue>>) -> Self {
        v.map_or(Params::Defaults, Params::Values)
    }
}

impl From<Params> for Option<BTreeMap<String, ParamValue>> {
    fn from(p: Params) -> Self {
        match p {
            Params::Defaults => None,
            Params::Values(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slot {
    pub role: SlotRole,
    pub candidates: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub slots: Vec<Slot>,
    pub standard_predictor: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid catalog: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Every invariant violation in `catalog`; empty iff the catalog is valid.
pub fn validate_catalog(catalog: &Catalog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: String, message: String| out.push(Violation { path, message });

    let predictors: Vec<usize> = catalog
        .slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.role == SlotRole::Predictor)
        .map(|(i, _)| i)
        .collect();
    match predictors.as_slice() {
        [] => push("slots".into(), "no predictor slot".into()),
        [i] if *i + 1 != catalog.slots.len() => {
            push(format!("slots[{i}](predictor)"), "predictor slot must be last".into())
        }
        [_] => {}
        _ => push("slots".into(), "more than one predictor slot".into()),
    }

    let mut ids = HashSet::new();
    for (si, slot) in catalog.slots.iter().enumerate() {
        let slot_path = format!("slots[{si}]({})", slot.role);
        if slot.candidates.is_empty() {
            push(slot_path.clone(), "empty candidate list".into());
        }
        for (ci, comp) in slot.candidates.iter().enumerate() {
            let comp_path = format!("{slot_path}/candidates[{ci}]({})", comp.id);
            if !ids.insert(comp.id.as_str()) {
                push(comp_path.clone(), format!("duplicate component id `{}`", comp.id));
            }
            let mut names = HashSet::new();
            for (pi, p) in comp.params.iter().enumerate() {
                let param_path = format!("{comp_path}/params[{pi}]({})", p.name);
                if !names.insert(p.name.as_str()) {
                    push(param_path.clone(), format!("duplicate parameter `{}`", p.name));
                }
                for message in p.violations() {
                    push(param_path.clone(), message);
                }
            }
        }
    }

    let standard_ok = predictors.first().is_some_and(|&i| {
        catalog.slots[i]
            .candidates
            .iter()
            .any(|c| c.id == catalog.standard_predictor)
    });
    if !standard_ok {
        push(
            "standard_predictor".into(),
            format!(
                "`{}` is not a candidate of the predictor slot",
                catalog.standard_predictor
            ),
        );
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("pipeline has {got} slots, catalog has {expected}")]
    SlotCount { got: usize, expected: usize },
    #[error("predictor slot is blank")]
    BlankPredictor,
    #[error("component `{id}` is not a candidate of slot {slot}")]
    UnknownComponent { slot: usize, id: String },
    #[error("parameter `{param}` of `{id}`: value {value} outside domain")]
    ParamOutOfDomain {
        id: String,
        param: String,
        value: String,
    },
    #[error("component `{id}` has no parameter `{param}`")]
    UnknownParam { id: String, param: String },
}

impl Catalog {
    /// Parses a catalog document and rejects it unless it validates.
    pub fn from_json(text: &str) -> Result<Catalog, CatalogError> {
        let catalog: Catalog = serde_json::from_str(text)?;
        let violations = validate_catalog(&catalog);
        if violations.is_empty() {
            Ok(catalog)
        } else {
            Err(CatalogError::Invalid(violations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Index of the predictor slot (the last slot of a valid catalog).
    pub fn predictor_slot(&self) -> usize {
        self.slots
            .iter()
            .position(|s| s.role == SlotRole::Predictor)
            .unwrap_or(self.slots.len().saturating_sub(1))
    }

    pub fn is_preprocessor_slot(&self, slot: usize) -> bool {
        self.slots[slot].role.is_preprocessor()
    }

    pub fn candidate(&self, slot: usize, id: &str) -> Option<&ComponentSpec> {
        self.slots.get(slot)?.candidates.iter().find(|c| c.id == id)
    }

    /// Looks up a component anywhere in the catalog.
    pub fn component(&self, id: &str) -> Option<(usize, &ComponentSpec)> {
        self.slots.iter().enumerate().find_map(|(si, s)| {
            s.candidates.iter().find(|c| c.id == id).map(|c| (si, c))
        })
    }

    pub fn standard_predictor(&self) -> Option<&ComponentSpec> {
        self.candidate(self.predictor_slot(), &self.standard_predictor)
    }

    /// Number of pipelines when every pre-processor slot may also be Blank.
    pub fn space_size(&self) -> u128 {
        self.slots
            .iter()
            .map(|s| s.candidates.len() as u128 + u128::from(s.role.is_preprocessor()))
            .product()
    }

    /// Checks a pipeline against this catalog's slot structure and domains.
    pub fn check_pipeline(&self, pipeline: &Pipeline) -> Result<(), PipelineError> {
        if pipeline.slots.len() != self.slots.len() {
            return Err(PipelineError::SlotCount {
                got: pipeline.slots.len(),
                expected: self.slots.len(),
            });
        }
        for (si, assignment) in pipeline.slots.iter().enumerate() {
            let SlotAssignment::Component(choice) = assignment else {
                if self.is_preprocessor_slot(si) {
                    continue;
                }
                return Err(PipelineError::BlankPredictor);
            };
            let comp = self
                .candidate(si, &choice.id)
                .ok_or_else(|| PipelineError::UnknownComponent {
                    slot: si,
                    id: choice.id.clone(),
                })?;
            if let Params::Values(values) = &choice.params {
                for (name, value) in values {
                    let spec = comp.param(name).ok_or_else(|| PipelineError::UnknownParam {
                        id: comp.id.clone(),
                        param: name.clone(),
                    })?;
                    if !spec.contains(value) {
                        return Err(PipelineError::ParamOutOfDomain {
                            id: comp.id.clone(),
                            param: name.clone(),
                            value: value.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A chosen component with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentChoice {
    pub id: String,
    #[serde(default)]
    pub params: Params,
}

/// Content of one pipeline slot. `Blank` (identity) serializes as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<ComponentChoice>", into = "Option<ComponentChoice>")]
pub enum SlotAssignment {
    Blank,
    Component(ComponentChoice),
}

impl SlotAssignment {
    pub fn component(id: &str, params: Params) -> Self {
        SlotAssignment::Component(ComponentChoice {
            id: id.to_string(),
            params,
        })
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            SlotAssignment::Blank => None,
            SlotAssignment::Component(c) => Some(&c.id),
        }
    }

    pub fn params(&self) -> Option<&Params> {
        match self {
            SlotAssignment::Blank => None,
            SlotAssignment::Component(c) => Some(&c.params),
        }
    }
}

impl From<Option<ComponentChoice>> for SlotAssignment {
    fn from(v: Option<ComponentChoice>) -> Self {
        v.map_or(SlotAssignment::Blank, SlotAssignment::Component)
    }
}

impl From<SlotAssignment> for Option<ComponentChoice> {
    fn from(v: SlotAssignment) -> Self {
        match v {
            SlotAssignment::Blank => None,
            SlotAssignment::Component(c) => Some(c),
        }
    }
}

/// One assignment per catalog slot, in catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pipeline {
    pub slots: Vec<SlotAssignment>,
}

impl Pipeline {
    pub fn new(slots: Vec<SlotAssignment>) -> Self {
        Pipeline { slots }
    }

    /// All slots blank except the predictor slot.
    pub fn predictor_only(catalog: &Catalog, id: &str, params: Params) -> Self {
        let mut slots = vec![SlotAssignment::Blank; catalog.slot_count()];
        slots[catalog.predictor_slot()] = SlotAssignment::component(id, params);
        Pipeline { slots }
    }

    /// Component ids per slot (`None` for Blank).
    pub fn ids(&self) -> Vec<Option<&str>> {
        self.slots.iter().map(SlotAssignment::id).collect()
    }

    /// A canonical string form, usable as a cache key.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("pipeline serializes")
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .slots
            .iter()
            .map(|s| match s {
                SlotAssignment::Blank => "-".to_string(),
                SlotAssignment::Component(c) => match &c.params {
                    Params::Defaults => c.id.clone(),
                    Params::Values(v) if v.is_empty() => c.id.clone(),
                    Params::Values(v) => {
                        let kv: Vec<String> = v.iter().map(|(k, x)| format!("{k}={x}")).collect();
                        format!("{}({})", c.id, kv.join(","))
                    }
                },
            })
            .collect();
        write!(f, "[{}]", parts.join(" -> "))
    }
}
