//! Run configuration files.
//!
//! A config is a JSON object; every field is optional and unknown keys are
//! rejected. Command-line flags override file values.

use std::fs;
use std::path::Path;

use mpxgat_core::eval::ExperimentConfig;
use mpxgat_core::graph::{NegPolicy, SplitConfig};
use mpxgat_core::model::ModelVariant;
use mpxgat_core::train::{GridSpec, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; every random stream of a run derives from it.
    pub seed: u64,
    pub repetitions: usize,
    pub split: SplitConfig,
    /// Training settings. `train.seed` is replaced by a seed derived from
    /// `seed` for each repetition.
    pub train: TrainConfig,
    pub grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig { seed: e.seed, repetitions: e.repetitions, split: e.split, train: e.train, grid: GridSpec::default() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(Error::json(path))
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            repetitions: self.repetitions,
            seed: self.seed,
            split: self.split.clone(),
            train: self.train.clone(),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.repetitions {
            self.repetitions = r;
        }
        if let Some(lr) = o.lr {
            self.train.lr = lr;
        }
        if let Some(e) = o.epochs {
            self.train.epochs = e;
        }
        if let Some(p) = o.neg_policy {
            self.split.neg_policy = p;
        }
        if let Some(v) = o.variant {
            self.train.model.variant = v;
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub repetitions: Option<usize>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub neg_policy: Option<NegPolicy>,
    pub variant: Option<ModelVariant>,
}

fn enum_values(key: &str) -> Option<Value> {
    let v = match key {
        "neg_policy" => json!(["sampled", "exhaustive"]),
        "intra_scope" => json!(["marked", "global"]),
        "on_empty" => json!(["resample", "error"]),
        "variant" => json!(["full", "no-horizontal", "random-horizontal"]),
        _ => return None,
    };
    Some(v)
}

fn schema_of(key: &str, v: &Value) -> Value {
    if let Some(values) = enum_values(key) {
        return json!({ "type": "string", "enum": values, "default": v });
    }
    match v {
        Value::Object(fields) => {
            let props: Map<String, Value> = fields.iter().map(|(k, x)| (k.clone(), schema_of(k, x))).collect();
            json!({ "type": "object", "additionalProperties": false, "properties": props })
        }
        Value::Array(items) => {
            let item = items.first().map_or(json!({}), |x| schema_of("", x));
            json!({ "type": "array", "items": item, "default": v })
        }
        Value::Bool(_) => json!({ "type": "boolean", "default": v }),
        Value::Number(n) if n.is_u64() => json!({ "type": "integer", "minimum": 0, "default": v }),
        Value::Number(_) => json!({ "type": "number", "default": v }),
        Value::String(_) => json!({ "type": "string", "default": v }),
        Value::Null => json!({}),
    }
}

/// JSON Schema of [`RunConfig`], with defaults.
pub fn schema() -> Value {
    let defaults = serde_json::to_value(RunConfig::default()).expect("config serializes");
    let mut s = schema_of("", &defaults);
    let obj = s.as_object_mut().unwrap();
    obj.insert("$schema".into(), json!("https://json-schema.org/draft/2020-12/schema"));
    obj.insert("title".into(), json!("mpxgat run configuration"));
    s
}
