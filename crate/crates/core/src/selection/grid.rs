use indexmap::IndexMap;
use rand::Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use super::pipeline::{PipelineSpec, Weighting};
use crate::error::{Error, Result};
use crate::model::{LearnerConfig, LearnerKind};
use crate::resample::ClassWeights;
use crate::rng::derived_rng;

pub const GRID_FORMAT_VERSION: u32 = 1;

/// Values for one parameter, as declared in a grid document.
#[derive(Debug, Clone, PartialEq)]
pub enum GridValues {
    List(Vec<Value>),
    /// Inclusive arithmetic range, `{"range": [lo, hi, step]}`.
    Range {
        lo: f64,
        hi: f64,
        step: f64,
    },
}

impl GridValues {
    pub fn expand(&self) -> Vec<Value> {
        match self {
            GridValues::List(v) => v.clone(),
            GridValues::Range { lo, hi, step } => {
                let integral = [lo, hi, step].iter().all(|v| v.fract() == 0.0);
                let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                (0..n)
                    .map(|i| {
                        let v = lo + i as f64 * step;
                        if integral {
                            Value::from(v as i64)
                        } else {
                            Value::from(v)
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Every point of the Cartesian product, last parameter varying fastest.
    #[default]
    Exhaustive,
    /// `samples` independent uniform draws per parameter.
    Random { samples: usize, seed: u64 },
}

/// Parameter grid for one learner family.
///
/// JSON form: `{"model": "dt", "max_depth": [5, null], "units_1": {"range": [16, 256, 16]}}`,
/// with an optional `"search": {"random": {"samples": 20, "seed": 0}}` and
/// an optional `"version": 1`.
/// Besides learner fields, a grid may name `class_weight` (`null`,
/// `"balanced"`, `"balanced_subsample"` or `{"0": w0, "1": w1}`), `solver`
/// (accepted, no effect), and for the MLP `num_layers` with `units_1..3`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub model: LearnerKind,
    pub search: SearchStrategy,
    pub params: IndexMap<String, GridValues>,
}

/// One point of a grid, resolved into a full pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub params: IndexMap<String, Value>,
    pub pipeline: PipelineSpec,
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

fn parse_search(v: &Value) -> Result<SearchStrategy> {
    match v {
        Value::String(s) if s == "exhaustive" => Ok(SearchStrategy::Exhaustive),
        Value::Object(m) => match m.get("random") {
            Some(Value::Number(n)) => Ok(SearchStrategy::Random {
                samples: n.as_u64().unwrap_or(0) as usize,
                seed: 0,
            }),
            Some(Value::Object(r)) => Ok(SearchStrategy::Random {
                samples: r.get("samples").and_then(Value::as_u64).unwrap_or(0) as usize,
                seed: r.get("seed").and_then(Value::as_u64).unwrap_or(0),
            }),
            _ => bad("search must be \"exhaustive\" or {\"random\": ...}"),
        },
        _ => bad("search must be \"exhaustive\" or {\"random\": ...}"),
    }
    .and_then(|s| match s {
        SearchStrategy::Random { samples: 0, .. } => bad("random search needs samples >= 1"),
        s => Ok(s),
    })
}

impl HyperGrid {
    pub fn new(model: LearnerKind) -> Self {
        HyperGrid {
            model,
            search: SearchStrategy::Exhaustive,
            params: IndexMap::new(),
        }
    }

    pub fn with(mut self, name: &str, values: Vec<Value>) -> Self {
        self.params
            .insert(name.to_string(), GridValues::List(values));
        self
    }

    /// Parses a grid document; `model` overrides or supplies the learner.
    pub fn from_json(s: &str, model: Option<LearnerKind>) -> Result<Self> {
        let doc: Value = serde_json::from_str(s)?;
        let Value::Object(map) = doc else {
            return bad("grid must be a JSON object");
        };
        let mut kind = model;
        let mut search = SearchStrategy::Exhaustive;
        let mut params = IndexMap::new();
        for (key, v) in map {
            match key.as_str() {
                "model" => {
                    let code = v
                        .as_str()
                        .ok_or_else(|| Error::InvalidParameter("model must be a string".into()))?;
                    kind = kind.or(Some(LearnerKind::parse(code)?));
                }
                "search" => search = parse_search(&v)?,
                "version" => {
                    if v.as_u64() != Some(u64::from(GRID_FORMAT_VERSION)) {
                        return Err(Error::FormatVersion {
                            expected: GRID_FORMAT_VERSION,
                            found: v.as_u64().unwrap_or(0) as u32,
                        });
                    }
                }
                _ => {
                    let values = match v {
                        Value::Array(a) if !a.is_empty() => GridValues::List(a),
                        Value::Object(o) if o.contains_key("range") => {
                            let r: Vec<f64> = o["range"]
                                .as_array()
                                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                                .unwrap_or_default();
                            match r[..] {
                                [lo, hi, step] if step > 0.0 && hi >= lo => GridValues::Range { lo, hi, step },
                                _ => return bad(format!("{key}: range must be [lo, hi, step] with step > 0 and hi >= lo")),
                            }
                        }
                        _ => return bad(format!("{key}: expected a non-empty list or a range")),
                    };
                    params.insert(key, values);
                }
            }
        }
        let model =
            kind.ok_or_else(|| Error::InvalidParameter("grid does not name a model".into()))?;
        Ok(HyperGrid {
            model,
            search,
            params,
        })
    }

    fn expanded(&self) -> Vec<(String, Vec<Value>)> {
        self.params
            .iter()
            .map(|(k, v)| (k.clone(), v.expand()))
            .collect()
    }

    /// Size of the full Cartesian product.
    pub fn product_size(&self) -> usize {
        self.expanded().iter().map(|(_, v)| v.len()).product()
    }

    pub fn n_candidates(&self) -> usize {
        match self.search {
            SearchStrategy::Exhaustive => self.product_size(),
            SearchStrategy::Random { samples, .. } => samples,
        }
    }

    /// Raw parameter assignments in enumeration order.
    pub fn assignments(&self) -> Vec<IndexMap<String, Value>> {
        let axes = self.expanded();
        match self.search {
            SearchStrategy::Exhaustive => {
                let total = self.product_size();
                (0..total)
                    .map(|mut i| {
                        let mut picks = vec![0; axes.len()];
                        for (a, (_, vals)) in axes.iter().enumerate().rev() {
                            picks[a] = i % vals.len();
                            i /= vals.len();
                        }
                        axes.iter()
                            .zip(picks)
                            .map(|((k, vals), p)| (k.clone(), vals[p].clone()))
                            .collect()
                    })
                    .collect()
            }
            SearchStrategy::Random { samples, seed } => (0..samples)
                .map(|s| {
                    let mut rng = derived_rng(seed, &[s as u64]);
                    axes.iter()
                        .map(|(k, vals)| (k.clone(), vals[rng.random_range(0..vals.len())].clone()))
                        .collect()
                })
                .collect(),
        }
    }

    /// Resolves every assignment against `template`. The template's learner
    /// supplies unlisted hyperparameters when it has the grid's family.
    pub fn candidates(&self, template: &PipelineSpec) -> Result<Vec<Candidate>> {
        self.assignments()
            .into_iter()
            .enumerate()
            .map(|(index, params)| {
                let pipeline = self.apply(&params, template)?;
                Ok(Candidate {
                    index,
                    params,
                    pipeline,
                })
            })
            .collect()
    }

    pub fn apply(
        &self,
        params: &IndexMap<String, Value>,
        template: &PipelineSpec,
    ) -> Result<PipelineSpec> {
        let base = if template.learner.kind() == self.model {
            template.learner.clone()
        } else {
            self.model.default_config()
        };
        let Value::Object(mut fields) = base.to_json_value() else {
            unreachable!("learner configs serialize to objects");
        };
        let mut pipeline = template.clone();
        let mut num_layers = None;
        let mut units: [Option<usize>; 3] = [None; 3];
        for (key, v) in params {
            match key.as_str() {
                "class_weight" => pipeline.weighting = parse_class_weight(v)?,
                "solver" if self.model == LearnerKind::Lr => {
                    if !v.is_string() {
                        return bad("solver must be a string");
                    }
                }
                "num_layers" if self.model == LearnerKind::Mlp => {
                    num_layers = Some(as_count(key, v)?);
                }
                "units_1" | "units_2" | "units_3" if self.model == LearnerKind::Mlp => {
                    let i = key.as_bytes()[6] - b'1';
                    units[i as usize] = Some(as_count(key, v)?);
                }
                "max_features" if v.is_null() => {
                    set_field(&mut fields, self.model, key, Value::from("all"))?;
                }
                _ => set_field(&mut fields, self.model, key, v.clone())?,
            }
        }
        if num_layers.is_some() || units.iter().any(Option::is_some) {
            let n = num_layers
                .unwrap_or_else(|| units.iter().rposition(Option::is_some).map_or(0, |p| p + 1));
            if !(1..=3).contains(&n) {
                return bad(format!("num_layers must lie in [1, 3], got {n}"));
            }
            let hidden: Vec<usize> = units[..n]
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    u.ok_or_else(|| Error::InvalidParameter(format!("units_{} missing", i + 1)))
                })
                .collect::<Result<_>>()?;
            fields.insert("hidden_layers".into(), Value::from(hidden));
        }
        pipeline.learner = serde_json::from_value::<LearnerConfig>(Value::Object(fields))
            .map_err(|e| Error::InvalidParameter(format!("{} grid: {e}", self.model.code())))?;
        Ok(pipeline)
    }
}

fn set_field(
    fields: &mut Map<String, Value>,
    model: LearnerKind,
    key: &str,
    v: Value,
) -> Result<()> {
    if key == "model" || !fields.contains_key(key) {
        return bad(format!(
            "unknown parameter '{key}' for model {}",
            model.code()
        ));
    }
    fields.insert(key.to_string(), v);
    Ok(())
}

fn as_count(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| Error::InvalidParameter(format!("{key} must be a non-negative integer")))
}

/// `balanced_subsample` has no separate meaning without per-tree
/// reweighting and maps to `balanced`.
fn parse_class_weight(v: &Value) -> Result<Weighting> {
    match v {
        Value::Null => Ok(Weighting::None),
        Value::String(s) => match s.as_str() {
            "none" | "None" => Ok(Weighting::None),
            "balanced" | "balanced_subsample" => Ok(Weighting::Balanced),
            _ => bad(format!("unknown class_weight '{s}'")),
        },
        Value::Object(m) => {
            let get = |k: &str| m.get(k).and_then(Value::as_f64);
            match (get("0"), get("1")) {
                (Some(n), Some(p)) => Ok(Weighting::Explicit(ClassWeights::new(n, p)?)),
                _ => bad("class_weight object needs numeric keys \"0\" and \"1\""),
            }
        }
        _ => bad("class_weight must be null, a string or {\"0\": w, \"1\": w}"),
    }
}
