//! Synthetic performance surfaces.
//!
//! A surface scores a pipeline as the sum of per-slot base values, pairwise
//! interaction terms scaled by `interaction_scale`, quadratic penalties
//! ("bowls") around an optimum for every real parameter, and optional Gaussian
//! noise. With `interaction_scale = 0` the surface is additively separable
//! across slots.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{EvalResult, Evaluator};
use crate::space::{Catalog, ComponentSpec, ParamKind, ParamSpec, Params, Pipeline, Slot, SlotRole};

pub const SURROGATE_KEY: &str = "surrogate";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("pipeline has {got} slots, surface has {expected}")]
    SlotCount { got: usize, expected: usize },
    #[error("slot {slot} has no value `{value}`")]
    UnknownCandidate { slot: usize, value: String },
    #[error("parameter `{param}` of `{component}` is not numeric")]
    NonNumeric { component: String, param: String },
    #[error("invalid surface: {0}")]
    Invalid(String),
    #[error("surface does not match catalog: {0}")]
    CatalogMismatch(String),
}

/// One slot of a surface: its values (`None` is Blank) and their base scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSlot {
    pub role: SlotRole,
    pub values: Vec<Option<String>>,
    pub base: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotValue {
    pub slot: usize,
    pub value: Option<String>,
}

/// Unscaled interaction between two values of different slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub first: SlotValue,
    pub second: SlotValue,
    pub value: f64,
}

/// Quadratic penalty `amplitude * ((x - optimum) / (hi - lo))^2` on a real parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bowl {
    pub component: String,
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub default: f64,
    pub optimum: f64,
    pub amplitude: f64,
}

impl Bowl {
    pub fn penalty(&self, x: f64) -> f64 {
        let z = (x - self.optimum) / (self.hi - self.lo);
        self.amplitude * z * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceFile {
    slots: Vec<SurfaceSlot>,
    interactions: Vec<Interaction>,
    bowls: Vec<Bowl>,
    interaction_scale: f64,
    noise_sd: f64,
    seed: u64,
}

/// A deterministic synthetic scoring function over a pipeline space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceFile", into = "SurfaceFile")]
pub struct SurrogateSurface {
    file: SurfaceFile,
    lookup: Vec<HashMap<Option<String>, usize>>,
    /// Dense interaction tables for slot pairs `i < j`, row-major in `(v_i, v_j)`.
    pairs: HashMap<(usize, usize), Vec<f64>>,
    bowls: HashMap<String, Vec<usize>>,
}

impl TryFrom<SurfaceFile> for SurrogateSurface {
    type Error = SurrogateError;

    fn try_from(file: SurfaceFile) -> Result<Self, SurrogateError> {
        let invalid = |m: String| Err(SurrogateError::Invalid(m));
        if !(file.interaction_scale >= 0.0 && file.interaction_scale.is_finite()) {
            return invalid("interaction_scale must be finite and >= 0".into());
        }
        if !(file.noise_sd >= 0.0 && file.noise_sd.is_finite()) {
            return invalid("noise_sd must be finite and >= 0".into());
        }
        let mut lookup = Vec::with_capacity(file.slots.len());
        for (s, slot) in file.slots.iter().enumerate() {
            if slot.values.is_empty() || slot.values.len() != slot.base.len() {
                return invalid(format!("slot {s}: values and base must be non-empty and of equal length"));
            }
            if slot.base.iter().any(|b| !b.is_finite()) {
                return invalid(format!("slot {s}: non-finite base value"));
            }
            let map: HashMap<_, _> = slot.values.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
            if map.len() != slot.values.len() {
                return invalid(format!("slot {s}: duplicate values"));
            }
            lookup.push(map);
        }
        let mut pairs: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        for (k, e) in file.interactions.iter().enumerate() {
            let (a, b) = (&e.first, &e.second);
            if a.slot >= b.slot || b.slot >= file.slots.len() || !e.value.is_finite() {
                return invalid(format!("interaction {k}: needs first.slot < second.slot within range and a finite value"));
            }
            let (Some(&ia), Some(&ib)) = (lookup[a.slot].get(&a.value), lookup[b.slot].get(&b.value)) else {
                return invalid(format!("interaction {k}: unknown slot value"));
            };
            let width = file.slots[b.slot].values.len();
            let table = pairs
                .entry((a.slot, b.slot))
                .or_insert_with(|| vec![0.0; file.slots[a.slot].values.len() * width]);
            table[ia * width + ib] = e.value;
        }
        let mut bowls: HashMap<String, Vec<usize>> = HashMap::new();
        for (k, b) in file.bowls.iter().enumerate() {
            let finite = [b.lo, b.hi, b.default, b.optimum, b.amplitude].iter().all(|v| v.is_finite());
            if !finite || b.lo >= b.hi || b.amplitude < 0.0 || !(b.lo..=b.hi).contains(&b.optimum) {
                return invalid(format!("bowl {k}: needs lo < hi, optimum in [lo, hi], amplitude >= 0"));
            }
            bowls.entry(b.component.clone()).or_default().push(k);
        }
        Ok(SurrogateSurface {
            file,
            lookup,
            pairs,
            bowls,
        })
    }
}

impl From<SurrogateSurface> for SurfaceFile {
    fn from(s: SurrogateSurface) -> Self {
        s.file
    }
}

impl SurrogateSurface {
    pub fn new(
        slots: Vec<SurfaceSlot>,
        interactions: Vec<Interaction>,
        bowls: Vec<Bowl>,
        interaction_scale: f64,
        noise_sd: f64,
        seed: u64,
    ) -> Result<Self, SurrogateError> {
        SurfaceFile {
            slots,
            interactions,
            bowls,
            interaction_scale,
            noise_sd,
            seed,
        }
        .try_into()
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surface serializes")
    }

    pub fn slots(&self) -> &[SurfaceSlot] {
        &self.file.slots
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.file.interactions
    }

    pub fn bowls(&self) -> &[Bowl] {
        &self.file.bowls
    }

    pub fn interaction_scale(&self) -> f64 {
        self.file.interaction_scale
    }

    pub fn noise_sd(&self) -> f64 {
        self.file.noise_sd
    }

    /// Interaction entries multiplied by the interaction scale.
    pub fn effective_interactions(&self) -> Vec<f64> {
        self.file
            .interactions
            .iter()
            .map(|e| self.file.interaction_scale * e.value)
            .collect()
    }

    /// Checks that the surface describes exactly the space of `catalog`.
    pub fn check_catalog(&self, catalog: &Catalog) -> Result<(), SurrogateError> {
        let mismatch = |m: String| Err(SurrogateError::CatalogMismatch(m));
        if catalog.slot_count() != self.file.slots.len() {
            return mismatch(format!(
                "{} catalog slots, {} surface slots",
                catalog.slot_count(),
                self.file.slots.len()
            ));
        }
        for (s, (cs, ss)) in catalog.slots.iter().zip(&self.file.slots).enumerate() {
            let blank = cs.role.is_preprocessor().then_some(None);
            let expected: Vec<Option<String>> = blank
                .into_iter()
                .chain(cs.candidates.iter().map(|c| Some(c.id.clone())))
                .collect();
            let mut got = ss.values.clone();
            let mut want = expected.clone();
            got.sort();
            want.sort();
            if cs.role != ss.role || got != want {
                return mismatch(format!("slot {s} differs"));
            }
        }
        Ok(())
    }

    /// Surface value of `pipeline`.
    pub fn score(&self, pipeline: &Pipeline) -> Result<f64, SurrogateError> {
        let slots = &self.file.slots;
        if pipeline.slots.len() != slots.len() {
            return Err(SurrogateError::SlotCount {
                got: pipeline.slots.len(),
                expected: slots.len(),
            });
        }
        let mut index = Vec::with_capacity(slots.len());
        for (s, a) in pipeline.slots.iter().enumerate() {
            let key = a.id().map(str::to_string);
            let i = *self.lookup[s].get(&key).ok_or_else(|| SurrogateError::UnknownCandidate {
                slot: s,
                value: key.unwrap_or_else(|| "Blank".into()),
            })?;
            index.push(i);
        }
        let mut value = 0.0;
        for (s, &i) in index.iter().enumerate() {
            value += slots[s].base[i];
        }
        for a in 0..slots.len() {
            for b in a + 1..slots.len() {
                if let Some(table) = self.pairs.get(&(a, b)) {
                    let width = slots[b].values.len();
                    value += self.file.interaction_scale * table[index[a] * width + index[b]];
                }
            }
        }
        for a in &pipeline.slots {
            let (Some(id), Some(params)) = (a.id(), a.params()) else {
                continue;
            };
            for &k in self.bowls.get(id).into_iter().flatten() {
                let bowl = &self.file.bowls[k];
                let x = match params {
                    Params::Values(v) if v.contains_key(&bowl.param) => {
                        v[&bowl.param].as_f64().ok_or_else(|| SurrogateError::NonNumeric {
                            component: id.to_string(),
                            param: bowl.param.clone(),
                        })?
                    }
                    _ => bowl.default,
                };
                value -= bowl.penalty(x);
            }
        }
        if self.file.noise_sd > 0.0 {
            value += self.noise(pipeline);
        }
        Ok(value)
    }

    /// Noise is a function of the surface seed and the pipeline, so repeated
    /// evaluations of one pipeline agree.
    fn noise(&self, pipeline: &Pipeline) -> f64 {
        let mut h = DefaultHasher::new();
        self.file.seed.hash(&mut h);
        pipeline.key().hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        Normal::new(0.0, self.file.noise_sd)
            .expect("noise_sd validated")
            .sample(&mut rng)
    }
}

/// Scores `pipeline` on `surface`; the result is always ok with zero wall time.
pub fn surrogate_eval(surface: &SurrogateSurface, pipeline: &Pipeline) -> Result<EvalResult, SurrogateError> {
    let v = surface.score(pipeline)?;
    Ok(EvalResult::ok(v, vec![v], Duration::ZERO))
}

impl Evaluator for SurrogateSurface {
    fn evaluate(&self, pipeline: &Pipeline) -> EvalResult {
        surrogate_eval(self, pipeline).unwrap_or_else(|e| EvalResult::failed(e.to_string(), Duration::ZERO))
    }
}

/// Parameters of [`make_surface`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    /// Candidate count per slot; the last slot is the predictor slot.
    pub slot_sizes: Vec<usize>,
    pub interaction_scale: f64,
    /// Range of bowl amplitudes.
    pub amplitude: (f64, f64),
    /// Real parameters per candidate, each on [0, 1] with default 0.5.
    pub params_per_candidate: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SurfaceConfig {
    pub fn parameterless(slot_sizes: Vec<usize>, interaction_scale: f64, seed: u64) -> Self {
        SurfaceConfig {
            slot_sizes,
            interaction_scale,
            amplitude: (0.0, 0.0),
            params_per_candidate: 0,
            noise_sd: 0.0,
            seed,
        }
    }
}

/// Draws a random surface and the catalog it is defined over.
///
/// Base values are uniform on [0, 1] (Blank included), interaction entries
/// uniform on [-1, 1] for every value pair of every slot pair, bowl optima
/// uniform on the parameter range and amplitudes uniform on `amplitude`.
pub fn make_surface(config: &SurfaceConfig) -> Result<(Catalog, SurrogateSurface), SurrogateError> {
    let sizes = &config.slot_sizes;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(SurrogateError::Invalid("slot sizes must be non-empty and >= 1".into()));
    }
    let (amp_lo, amp_hi) = config.amplitude;
    if !(0.0 <= amp_lo && amp_lo <= amp_hi && amp_hi.is_finite()) {
        return Err(SurrogateError::Invalid("amplitude range must satisfy 0 <= lo <= hi".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let last = sizes.len() - 1;
    let role = |s: usize| match s {
        s if s == last => SlotRole::Predictor,
        0 => SlotRole::DataPreprocessor,
        _ => SlotRole::FeaturePreprocessor,
    };
    let params: Vec<ParamSpec> = (0..config.params_per_candidate)
        .map(|k| ParamSpec::real(&format!("x{k}"), 0.0, 1.0, 0.5))
        .collect();
    let catalog_slots: Vec<Slot> = sizes
        .iter()
        .enumerate()
        .map(|(s, &n)| Slot {
            role: role(s),
            candidates: (0..n)
                .map(|c| ComponentSpec::new(&format!("s{s}c{c}"), SURROGATE_KEY, params.clone()))
                .collect(),
        })
        .collect();
    let catalog = Catalog {
        standard_predictor: catalog_slots[last].candidates[0].id.clone(),
        slots: catalog_slots,
    };

    let surface_slots: Vec<SurfaceSlot> = catalog
        .slots
        .iter()
        .map(|slot| {
            let values: Vec<Option<String>> = slot
                .role
                .is_preprocessor()
                .then_some(None)
                .into_iter()
                .chain(slot.candidates.iter().map(|c| Some(c.id.clone())))
                .collect();
            let base = values.iter().map(|_| rng.gen_range(0.0..=1.0)).collect();
            SurfaceSlot {
                role: slot.role,
                values,
                base,
            }
        })
        .collect();

    let mut interactions = Vec::new();
    for a in 0..surface_slots.len() {
        for b in a + 1..surface_slots.len() {
            for va in &surface_slots[a].values {
                for vb in &surface_slots[b].values {
                    interactions.push(Interaction {
                        first: SlotValue {
                            slot: a,
                            value: va.clone(),
                        },
                        second: SlotValue {
                            slot: b,
                            value: vb.clone(),
                        },
                        value: rng.gen_range(-1.0..=1.0),
                    });
                }
            }
        }
    }

    let mut bowls = Vec::new();
    for c in catalog.slots.iter().flat_map(|s| &s.candidates) {
        for p in &c.params {
            if p.kind != ParamKind::Real {
                continue;
            }
            let (lo, hi) = (p.lo.unwrap_or(0.0), p.hi.unwrap_or(1.0));
            bowls.push(Bowl {
                component: c.id.clone(),
                param: p.name.clone(),
                lo,
                hi,
                default: p.default.as_ref().and_then(|d| d.as_f64()).unwrap_or(lo),
                optimum: rng.gen_range(lo..=hi),
                amplitude: rng.gen_range(amp_lo..=amp_hi),
            });
        }
    }

    let surface = SurrogateSurface::new(
        surface_slots,
        interactions,
        bowls,
        config.interaction_scale,
        config.noise_sd,
        config.seed,
    )?;
    Ok((catalog, surface))
}

/// Two slots, one transformer `t1` and predictors `p1` (standard) and `p2`,
/// with values (Blank, p1) = 0.6, (Blank, p2) = 0.7, (t1, p1) = 0.9 and
/// (t1, p2) = 0.65. The best choice of predictor depends on the pre-processor.
pub fn worked_fixture() -> (Catalog, SurrogateSurface) {
    let catalog = Catalog {
        slots: vec![
            Slot {
                role: SlotRole::DataPreprocessor,
                candidates: vec![ComponentSpec::new("t1", SURROGATE_KEY, vec![])],
            },
            Slot {
                role: SlotRole::Predictor,
                candidates: vec![
                    ComponentSpec::new("p1", SURROGATE_KEY, vec![]),
                    ComponentSpec::new("p2", SURROGATE_KEY, vec![]),
                ],
            },
        ],
        standard_predictor: "p1".into(),
    };
    let value = |slot: usize, id: Option<&str>| SlotValue {
        slot,
        value: id.map(str::to_string),
    };
    let surface = SurrogateSurface::new(
        vec![
            SurfaceSlot {
                role: SlotRole::DataPreprocessor,
                values: vec![None, Some("t1".into())],
                base: vec![0.0, 0.0],
            },
            SurfaceSlot {
                role: SlotRole::Predictor,
                values: vec![Some("p1".into()), Some("p2".into())],
                base: vec![0.6, 0.7],
            },
        ],
        vec![
            Interaction {
                first: value(0, Some("t1")),
                second: value(1, Some("p1")),
                value: 0.9 - 0.6,
            },
            Interaction {
                first: value(0, Some("t1")),
                second: value(1, Some("p2")),
                value: 0.65 - 0.7,
            },
        ],
        vec![],
        1.0,
        0.0,
        0,
    )
    .expect("fixture surface is valid");
    (catalog, surface)
}
