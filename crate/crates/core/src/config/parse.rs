//! YAML document walker.
//!
//! The document is first read into a generic YAML tree, then walked section
//! by section so that every problem is collected instead of aborting on the
//! first one (which is what a derived deserializer would do).

use std::path::PathBuf;

use serde_yaml::{Mapping, Value};

use super::{
    validate_with, ConfigError, DataConfig, DataFormat, ExperimentConfig, ModelConfig,
    Normalization, ParamValue, Params, SplitFractions, TrainConfig, Violation,
};
use crate::dataset::SyntheticProfile;
use crate::imputers::ImputerRegistry;
use crate::missingness::{MechanismRegistry, MissingnessSpec, DEFAULT_MAX_GAP};

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Reject keys the schema does not know.
    pub strict: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { strict: true }
    }
}

const TOP_KEYS: &[&str] = &["experiment_name", "data", "model", "train"];
const DATA_KEYS: &[&str] = &[
    "dataset_name",
    "path",
    "format",
    "channels",
    "sampling_rate_hz",
    "window_length",
    "normalization",
    "split",
    "missingness",
    "seed",
    "synthetic",
];
const SPLIT_KEYS: &[&str] = &["train", "val", "test"];
const MISSINGNESS_KEYS: &[&str] = &[
    "type",
    "percent",
    "max_gap",
    "pattern_path",
    "per_channel",
    "seed",
];
const SYNTHETIC_KEYS: &[&str] = &[
    "n_samples",
    "pulse_rate_hz",
    "rate_jitter",
    "pulse_width_s",
    "baseline_freq_hz",
    "baseline_amplitude",
    "noise_std",
];
const MODEL_KEYS: &[&str] = &["name", "params"];
const TRAIN_KEYS: &[&str] = &["enabled", "batch_size", "epochs"];

/// Parses `text`, applies defaults and validates against the given
/// registries. Structural and semantic violations are returned together.
pub fn parse_config_with(
    text: &str,
    options: &ParseOptions,
    imputers: &ImputerRegistry,
    mechanisms: &MechanismRegistry,
) -> Result<ExperimentConfig, ConfigError> {
    let doc: Value = serde_yaml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let root = match doc {
        Value::Mapping(m) => m,
        Value::Null => Mapping::new(),
        _ => {
            return Err(ConfigError::Syntax(
                "top level must be a key/value mapping".into(),
            ))
        }
    };

    let mut w = Walker {
        strict: options.strict,
        violations: Vec::new(),
    };
    w.check_keys(&root, "", TOP_KEYS);

    let experiment_name = w.string(&root, "", "experiment_name").unwrap_or_default();

    let data = match w.section(&root, "data") {
        Some(m) => w.data(&m),
        None => placeholder_data(),
    };
    let model = match w.section(&root, "model") {
        Some(m) => w.model(&m),
        None => ModelConfig {
            name: String::new(),
            params: Params::new(),
        },
    };
    let train = match w.section(&root, "train") {
        Some(m) => w.train(&m),
        None => TrainConfig::default(),
    };

    let config = ExperimentConfig {
        experiment_name,
        data,
        model,
        train,
    };

    let mut violations = w.violations;
    let semantic = validate_with(&config, imputers, mechanisms);
    let covered: Vec<String> = violations.iter().map(|v| v.path().to_string()).collect();
    violations.extend(
        semantic
            .into_iter()
            .filter(|v| !is_covered(v.path(), &covered)),
    );

    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Canonical YAML form of a config. Parsing the output yields the same
/// config.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    serde_yaml::to_string(config).expect("config serializes")
}

/// True when `path` equals or lies below one of the already reported paths.
fn is_covered(path: &str, reported: &[String]) -> bool {
    reported.iter().any(|r| {
        path == r || (path.starts_with(r.as_str()) && path.as_bytes().get(r.len()) == Some(&b'.'))
    })
}

fn placeholder_data() -> DataConfig {
    DataConfig {
        dataset_name: "placeholder".into(),
        path: None,
        format: DataFormat::Synthetic,
        channels: 1,
        sampling_rate_hz: 100.0,
        window_length: 1000,
        normalization: Normalization::Zscore,
        split: SplitFractions::default(),
        missingness: MissingnessSpec::extended(0.1),
        seed: 0,
        synthetic: SyntheticProfile::default(),
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn key_name(k: &Value) -> String {
    match k {
        Value::String(s) => s.clone(),
        other => serde_yaml::to_string(other)
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|_| "?".into()),
    }
}

struct Walker {
    strict: bool,
    violations: Vec<Violation>,
}

impl Walker {
    fn invalid(&mut self, path: String, reason: &str) {
        self.violations.push(Violation::invalid(path, reason));
    }

    fn check_keys(&mut self, map: &Mapping, prefix: &str, allowed: &[&str]) {
        if !self.strict {
            return;
        }
        for k in map.keys() {
            let name = key_name(k);
            if !allowed.contains(&name.as_str()) {
                self.violations
                    .push(Violation::UnknownField(join(prefix, &name)));
            }
        }
    }

    /// Top-level section lookup; absence is a `MissingSection`.
    fn section(&mut self, root: &Mapping, name: &str) -> Option<Mapping> {
        match root.get(name) {
            None => {
                self.violations
                    .push(Violation::MissingSection(name.to_string()));
                None
            }
            Some(v) => self.mapping(v, name.to_string()),
        }
    }

    fn mapping(&mut self, v: &Value, path: String) -> Option<Mapping> {
        match v {
            Value::Mapping(m) => Some(m.clone()),
            Value::Null => Some(Mapping::new()),
            _ => {
                self.invalid(path, "expected a mapping");
                None
            }
        }
    }

    fn string(&mut self, map: &Mapping, prefix: &str, key: &str) -> Option<String> {
        let path = join(prefix, key);
        match map.get(key) {
            None | Some(Value::Null) => {
                self.invalid(path, "required");
                None
            }
            Some(v) => self.string_value(v, path),
        }
    }

    fn opt_string(&mut self, map: &Mapping, prefix: &str, key: &str) -> Option<String> {
        match map.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => self.string_value(v, join(prefix, key)),
        }
    }

    fn string_value(&mut self, v: &Value, path: String) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.invalid(path, "expected a string");
                None
            }
        }
    }

    fn real(&mut self, map: &Mapping, prefix: &str, key: &str, default: f64) -> f64 {
        match map.get(key) {
            None | Some(Value::Null) => default,
            Some(v) => self.real_value(v, join(prefix, key)).unwrap_or(default),
        }
    }

    fn real_value(&mut self, v: &Value, path: String) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.invalid(path, "expected a finite number");
                None
            }
        }
    }

    fn uint(&mut self, map: &Mapping, prefix: &str, key: &str, default: u64) -> u64 {
        match map.get(key) {
            None | Some(Value::Null) => default,
            Some(v) => match v.as_u64() {
                Some(x) => x,
                None => {
                    self.invalid(join(prefix, key), "expected a non-negative integer");
                    default
                }
            },
        }
    }

    fn opt_uint(&mut self, map: &Mapping, prefix: &str, key: &str) -> Option<u64> {
        match map.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => {
                let r = v.as_u64();
                if r.is_none() {
                    self.invalid(join(prefix, key), "expected a non-negative integer");
                }
                r
            }
        }
    }

    fn boolean(&mut self, map: &Mapping, prefix: &str, key: &str, default: bool) -> bool {
        match map.get(key) {
            None | Some(Value::Null) => default,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.invalid(join(prefix, key), "expected true or false");
                default
            }
        }
    }

    fn data(&mut self, m: &Mapping) -> DataConfig {
        const P: &str = "data";
        self.check_keys(m, P, DATA_KEYS);
        let mut d = placeholder_data();

        if let Some(name) = self.string(m, P, "dataset_name") {
            d.dataset_name = name;
        }
        d.path = self.opt_string(m, P, "path").map(PathBuf::from);
        d.format = match self.opt_string(m, P, "format") {
            Some(f) => match DataFormat::from_name(&f) {
                Some(f) => f,
                None => {
                    self.invalid(
                        "data.format".into(),
                        "expected one of csv, raw-f32, jsonl, synthetic",
                    );
                    placeholder_format(&d.path)
                }
            },
            None if d.path.is_some() => {
                self.invalid("data.format".into(), "required when data.path is given");
                DataFormat::Csv
            }
            None => DataFormat::Synthetic,
        };
        d.channels = self.uint(m, P, "channels", 1) as usize;
        d.sampling_rate_hz = self.real(m, P, "sampling_rate_hz", 100.0);
        d.window_length = self.uint(m, P, "window_length", 1000) as usize;
        d.normalization = match self.opt_string(m, P, "normalization").as_deref() {
            None | Some("zscore") => Normalization::Zscore,
            Some("none") => Normalization::None,
            Some(_) => {
                self.invalid("data.normalization".into(), "expected none or zscore");
                Normalization::Zscore
            }
        };
        d.split = match m.get("split") {
            None | Some(Value::Null) => SplitFractions::default(),
            Some(v) => self.split(v),
        };
        d.seed = self.uint(m, P, "seed", 0);
        d.synthetic = SyntheticProfile::for_dataset(&d.dataset_name);
        if let Some(v) = m.get("synthetic") {
            if let Some(sm) = self.mapping(v, "data.synthetic".into()) {
                self.synthetic(&sm, &mut d.synthetic);
            }
        }
        match m.get("missingness") {
            None | Some(Value::Null) => self.invalid("data.missingness".into(), "required"),
            Some(v) => {
                if let Some(mm) = self.mapping(v, "data.missingness".into()) {
                    d.missingness = self.missingness(&mm);
                }
            }
        }
        d
    }

    fn split(&mut self, v: &Value) -> SplitFractions {
        const P: &str = "data.split";
        let mut s = SplitFractions::default();
        match v {
            Value::Mapping(m) => {
                self.check_keys(m, P, SPLIT_KEYS);
                s.train = self.real(m, P, "train", 0.0);
                s.val = self.real(m, P, "val", 0.0);
                s.test = self.real(m, P, "test", 0.0);
            }
            Value::Sequence(seq) if seq.len() == 3 => {
                let vals: Vec<Option<f64>> = seq.iter().map(Value::as_f64).collect();
                match vals[..] {
                    [Some(a), Some(b), Some(c)] => {
                        s = SplitFractions {
                            train: a,
                            val: b,
                            test: c,
                        }
                    }
                    _ => self.invalid(P.into(), "expected three numbers"),
                }
            }
            _ => self.invalid(
                P.into(),
                "expected {train, val, test} or a list of three numbers",
            ),
        }
        s
    }

    fn synthetic(&mut self, m: &Mapping, s: &mut SyntheticProfile) {
        const P: &str = "data.synthetic";
        self.check_keys(m, P, SYNTHETIC_KEYS);
        s.n_samples = self.uint(m, P, "n_samples", s.n_samples as u64) as usize;
        s.pulse_rate_hz = self.real(m, P, "pulse_rate_hz", s.pulse_rate_hz);
        s.rate_jitter = self.real(m, P, "rate_jitter", s.rate_jitter);
        s.pulse_width_s = self.real(m, P, "pulse_width_s", s.pulse_width_s);
        s.baseline_freq_hz = self.real(m, P, "baseline_freq_hz", s.baseline_freq_hz);
        s.baseline_amplitude = self.real(m, P, "baseline_amplitude", s.baseline_amplitude);
        s.noise_std = self.real(m, P, "noise_std", s.noise_std);
    }

    fn missingness(&mut self, m: &Mapping) -> MissingnessSpec {
        const P: &str = "data.missingness";
        self.check_keys(m, P, MISSINGNESS_KEYS);
        let kind = self.string(m, P, "type").unwrap_or_default();
        MissingnessSpec {
            percent: self.real(m, P, "percent", 0.0),
            max_gap: self.uint(m, P, "max_gap", DEFAULT_MAX_GAP as u64) as usize,
            pattern_path: self.opt_string(m, P, "pattern_path").map(PathBuf::from),
            per_channel: self.boolean(m, P, "per_channel", false),
            seed: self.opt_uint(m, P, "seed"),
            kind,
        }
    }

    fn model(&mut self, m: &Mapping) -> ModelConfig {
        const P: &str = "model";
        self.check_keys(m, P, MODEL_KEYS);
        let name = self.string(m, P, "name").unwrap_or_default();
        let mut params = Params::new();
        if let Some(v) = m.get("params") {
            if let Some(pm) = self.mapping(v, "model.params".into()) {
                for (k, v) in &pm {
                    let key = key_name(k);
                    let path = join("model.params", &key);
                    let value = match v {
                        Value::Bool(b) => Some(ParamValue::Bool(*b)),
                        Value::String(s) => Some(ParamValue::Str(s.clone())),
                        Value::Number(n) => match n.as_i64() {
                            Some(i) => Some(ParamValue::Int(i)),
                            None => n.as_f64().map(ParamValue::Float),
                        },
                        _ => None,
                    };
                    match value {
                        Some(v) => {
                            params.insert(key, v);
                        }
                        None => self.invalid(path, "expected a scalar value"),
                    }
                }
            }
        }
        ModelConfig { name, params }
    }

    fn train(&mut self, m: &Mapping) -> TrainConfig {
        const P: &str = "train";
        self.check_keys(m, P, TRAIN_KEYS);
        let d = TrainConfig::default();
        TrainConfig {
            enabled: self.boolean(m, P, "enabled", d.enabled),
            batch_size: self.uint(m, P, "batch_size", d.batch_size as u64) as usize,
            epochs: self.uint(m, P, "epochs", d.epochs),
        }
    }
}

fn placeholder_format(path: &Option<PathBuf>) -> DataFormat {
    if path.is_some() {
        DataFormat::Csv
    } else {
        DataFormat::Synthetic
    }
}
