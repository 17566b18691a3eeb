//! Flat JSON experiment configuration.
//!
//! Every key is optional in the file and falls back to [`ExperimentConfig::default`];
//! unknown keys are rejected.

use std::{fmt, path::PathBuf};

use fedsim_core::{
    datakit::SyntheticSpec,
    fedcore::{Aggregation, FedAvgConfig, PerFedAvgConfig, Strategy, Variant},
    models::ModelSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionScheme {
    Dirichlet,
    Iid,
    Shards,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationChoice {
    /// Weighted for FedAvg, uniform for Per-FedAvg.
    Auto,
    Weighted,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "fedavg")]
    FedAvg,
    #[serde(rename = "perfedavg-hf")]
    PerFedAvgHf,
    #[serde(rename = "perfedavg-fo")]
    PerFedAvgFo,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FedAvg => "fedavg",
            Algorithm::PerFedAvgHf => "perfedavg-hf",
            Algorithm::PerFedAvgFo => "perfedavg-fo",
        }
    }

    pub fn is_personalized(self) -> bool {
        self != Algorithm::FedAvg
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,

    pub dataset: DatasetSource,
    pub csv_path: Option<PathBuf>,
    pub num_classes: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    pub class_separation: f64,
    pub noise_scale: f64,

    pub model: ModelChoice,
    pub hidden_dims: Vec<usize>,

    pub num_clients: usize,
    pub partition: PartitionScheme,
    pub alpha_dir: f64,
    pub samples_per_client: usize,
    pub shards_per_client: usize,
    pub test_fraction: f64,

    pub algorithm: Algorithm,
    pub rounds: usize,
    pub client_fraction: f64,
    pub local_steps: usize,
    pub batch_size: usize,
    pub local_lr: f64,
    pub alpha_inner: f64,
    pub beta: f64,
    pub aggregation: AggregationChoice,
    pub eval_every: usize,

    pub metrics_path: Option<PathBuf>,
    pub comparison_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,

    pub compare_algorithms: Vec<Algorithm>,
    pub compare_alpha_dirs: Vec<f64>,
    pub compare_taus: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fl = FedAvgConfig::default();
        Self {
            seed: 0,
            dataset: DatasetSource::Synthetic,
            csv_path: None,
            num_classes: 10,
            input_dim: 20,
            samples_per_class: 1000,
            class_separation: 3.0,
            noise_scale: 1.0,
            model: ModelChoice::Logistic,
            hidden_dims: Vec::new(),
            num_clients: 30,
            partition: PartitionScheme::Dirichlet,
            alpha_dir: 0.5,
            samples_per_client: 200,
            shards_per_client: 2,
            test_fraction: 0.2,
            algorithm: Algorithm::PerFedAvgHf,
            rounds: fl.rounds,
            client_fraction: fl.client_fraction,
            local_steps: fl.local_steps,
            batch_size: fl.batch_size,
            local_lr: fl.local_lr,
            alpha_inner: 0.01,
            beta: 0.01,
            aggregation: AggregationChoice::Auto,
            eval_every: 10,
            metrics_path: None,
            comparison_path: None,
            manifest_path: None,
            compare_algorithms: vec![Algorithm::FedAvg, Algorithm::PerFedAvgHf],
            compare_alpha_dirs: vec![0.1, 0.5, 10.0],
            compare_taus: vec![10, 4],
        }
    }
}

/// Value shape of a config key, used to type command-line overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Text,
    Path,
    IntList,
    FloatList,
    TextList,
}

impl Kind {
    fn expected(self) -> &'static str {
        match self {
            Kind::Int => "a nonnegative integer",
            Kind::Float => "a number",
            Kind::Text | Kind::Path => "a string",
            Kind::IntList => "comma-separated nonnegative integers",
            Kind::FloatList => "comma-separated numbers",
            Kind::TextList => "comma-separated names",
        }
    }
}

pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, help: &'static str) -> KeySpec {
    KeySpec { name, kind, help }
}

/// Every configuration key, in help order.
pub const KEYS: &[KeySpec] = &[
    key(
        "seed",
        Kind::Int,
        "master seed; every random stream derives from it",
    ),
    key("dataset", Kind::Text, "data source: synthetic | csv"),
    key(
        "csv_path",
        Kind::Path,
        "header-less `label,f1,...,fd` file when dataset=csv",
    ),
    key("num_classes", Kind::Int, "synthetic: number of classes N"),
    key("input_dim", Kind::Int, "synthetic: feature dimension d"),
    key(
        "samples_per_class",
        Kind::Int,
        "synthetic: examples per class",
    ),
    key(
        "class_separation",
        Kind::Float,
        "synthetic: distance of class means from the origin",
    ),
    key(
        "noise_scale",
        Kind::Float,
        "synthetic: per-feature Gaussian noise sd",
    ),
    key("model", Kind::Text, "classifier: logistic | mlp"),
    key(
        "hidden_dims",
        Kind::IntList,
        "mlp hidden layer widths, e.g. 32 or 64,32",
    ),
    key("num_clients", Kind::Int, "number of clients K"),
    key(
        "partition",
        Kind::Text,
        "client partition: dirichlet | iid | shards",
    ),
    key(
        "alpha_dir",
        Kind::Float,
        "Dirichlet concentration (small = heterogeneous)",
    ),
    key(
        "samples_per_client",
        Kind::Int,
        "dirichlet: examples drawn per client",
    ),
    key(
        "shards_per_client",
        Kind::Int,
        "shards: label-sorted shards per client",
    ),
    key("test_fraction", Kind::Float, "per-client test share"),
    key(
        "algorithm",
        Kind::Text,
        "fedavg | perfedavg-hf | perfedavg-fo",
    ),
    key(
        "rounds",
        Kind::Int,
        "communication rounds (1000 at full scale)",
    ),
    key(
        "client_fraction",
        Kind::Float,
        "fraction r of clients per round",
    ),
    key(
        "local_steps",
        Kind::Int,
        "local updates tau per round (gradient steps)",
    ),
    key("batch_size", Kind::Int, "local minibatch size B"),
    key("local_lr", Kind::Float, "FedAvg local SGD learning rate"),
    key(
        "alpha_inner",
        Kind::Float,
        "Per-FedAvg inner step alpha' (also the personalization step)",
    ),
    key("beta", Kind::Float, "Per-FedAvg outer step beta"),
    key(
        "aggregation",
        Kind::Text,
        "auto | weighted | uniform (auto: weighted for fedavg, uniform for perfedavg)",
    ),
    key(
        "eval_every",
        Kind::Int,
        "rounds between evaluations (final round always evaluated)",
    ),
    key("metrics_path", Kind::Path, "run: metrics CSV output"),
    key(
        "comparison_path",
        Kind::Path,
        "compare: comparison CSV output",
    ),
    key("manifest_path", Kind::Path, "partition manifest CSV output"),
    key(
        "compare_algorithms",
        Kind::TextList,
        "compare: algorithms (columns)",
    ),
    key(
        "compare_alpha_dirs",
        Kind::FloatList,
        "compare: alpha_dir values",
    ),
    key("compare_taus", Kind::IntList, "compare: tau values"),
];

pub fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

fn parse_scalar(kind: Kind, raw: &str) -> Option<Value> {
    let raw = raw.trim();
    match kind {
        Kind::Int | Kind::IntList => raw.parse::<u64>().ok().map(Value::from),
        Kind::Float | Kind::FloatList => raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::from),
        Kind::Text | Kind::Path | Kind::TextList => Some(Value::from(raw)),
    }
}

/// Parses a command-line value for `key` into the JSON value it overrides.
pub fn parse_override(key: &str, raw: &str) -> SimResult<Value> {
    let spec = key_spec(key).ok_or_else(|| SimError::config(format!("unknown key `{key}`")))?;
    let bad = || {
        SimError::config(format!(
            "invalid value for `{key}`: expected {}, got `{raw}`",
            spec.kind.expected()
        ))
    };
    match spec.kind {
        Kind::IntList | Kind::FloatList | Kind::TextList => {
            if raw.trim().is_empty() {
                return Ok(Value::Array(Vec::new()));
            }
            raw.split(',')
                .map(|part| parse_scalar(spec.kind, part).ok_or_else(bad))
                .collect::<SimResult<Vec<_>>>()
                .map(Value::Array)
        }
        kind => parse_scalar(kind, raw).ok_or_else(bad),
    }
}

impl ExperimentConfig {
    /// Builds a config from a JSON object plus `(key, raw value)` overrides.
    pub fn from_parts(
        file: Option<Map<String, Value>>,
        overrides: &[(String, String)],
    ) -> SimResult<Self> {
        let mut map = file.unwrap_or_default();
        for (key, raw) in overrides {
            map.insert(key.clone(), parse_override(key, raw)?);
        }
        let cfg: Self = serde_json::from_value(Value::Object(map))
            .map_err(|e| SimError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> SimResult<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| SimError::config(format!("invalid JSON: {e}")))?;
        match value {
            Value::Object(map) => Self::from_parts(Some(map), &[]),
            _ => Err(SimError::config("config file must hold a JSON object")),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> SimResult<()> {
        let fail = |msg: String| Err(SimError::config(msg));
        if self.dataset == DatasetSource::Csv && self.csv_path.is_none() {
            return fail("dataset=csv requires csv_path".into());
        }
        if self.dataset == DatasetSource::Synthetic {
            self.synthetic_spec()
                .validate()
                .map_err(|e| SimError::config(e.to_string()))?;
        }
        if self.num_clients == 0 {
            return fail("num_clients must be at least 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            ));
        }
        if self.partition == PartitionScheme::Dirichlet && !(self.alpha_dir > 0.0) {
            return fail(format!(
                "alpha_dir must be positive, got {}",
                self.alpha_dir
            ));
        }
        if self.partition == PartitionScheme::Dirichlet && self.samples_per_client == 0 {
            return fail("samples_per_client must be positive".into());
        }
        if self.partition == PartitionScheme::Shards && self.shards_per_client == 0 {
            return fail("shards_per_client must be positive".into());
        }
        if self.model == ModelChoice::Mlp && self.hidden_dims.is_empty() {
            return fail("model=mlp requires hidden_dims".into());
        }
        if self.model == ModelChoice::Logistic && !self.hidden_dims.is_empty() {
            return fail("model=logistic takes no hidden_dims".into());
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1".into());
        }
        if self.compare_alpha_dirs.iter().any(|a| !(*a > 0.0)) {
            return fail("compare_alpha_dirs must be positive".into());
        }
        self.strategy()
            .validate()
            .map_err(|e| SimError::config(e.to_string()))
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            num_classes: self.num_classes,
            input_dim: self.input_dim,
            samples_per_class: self.samples_per_class,
            class_separation: self.class_separation,
            noise_scale: self.noise_scale,
        }
    }

    pub fn fedavg_config(&self) -> FedAvgConfig {
        FedAvgConfig {
            rounds: self.rounds,
            client_fraction: self.client_fraction,
            local_steps: self.local_steps,
            batch_size: self.batch_size,
            local_lr: self.local_lr,
        }
    }

    pub fn strategy(&self) -> Strategy {
        let base = self.fedavg_config();
        let per = |variant| PerFedAvgConfig {
            base: base.clone(),
            alpha_inner: self.alpha_inner,
            beta: self.beta,
            variant,
        };
        match self.algorithm {
            Algorithm::FedAvg => Strategy::FedAvg(base.clone()),
            Algorithm::PerFedAvgHf => Strategy::PerFedAvg(per(Variant::Hessian)),
            Algorithm::PerFedAvgFo => Strategy::PerFedAvg(per(Variant::FirstOrder)),
        }
    }

    pub fn aggregation(&self) -> Aggregation {
        match self.aggregation {
            AggregationChoice::Auto => self.strategy().default_aggregation(),
            AggregationChoice::Weighted => Aggregation::Weighted,
            AggregationChoice::Uniform => Aggregation::Uniform,
        }
    }

    pub fn model_spec(&self, input_dim: usize, num_classes: usize) -> SimResult<ModelSpec> {
        let spec = match self.model {
            ModelChoice::Logistic => ModelSpec::logistic(input_dim, num_classes),
            ModelChoice::Mlp => ModelSpec::mlp(input_dim, self.hidden_dims.clone(), num_classes),
        };
        spec.map_err(|e| SimError::config(e.to_string()))
    }
}

/// Default of every key as it appears in JSON, for help output.
pub fn default_values() -> Map<String, Value> {
    match serde_json::to_value(ExperimentConfig::default()).expect("config serializes") {
        Value::Object(map) => map,
        _ => unreachable!("config serializes to an object"),
    }
}
