//! Experiment configuration: three mandatory sections (`data`, `model`,
//! `train`) parsed from a YAML document, validated as a whole, and merged
//! with command-line overrides.
//!
//! Validation never stops at the first problem. Every independent violation
//! is reported once, so a document with `k` mistakes yields `k` entries.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{self, SyntheticProfile};
use crate::imputers::ImputerRegistry;
use crate::missingness::{MechanismRegistry, MissingnessSpec};

pub use parse::{parse_config_with, serialize_config, ParseOptions};

/// Name pattern for experiment and dataset identifiers: `[A-Za-z0-9_-]+`.
pub fn is_safe_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Model parameter value as written in the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(i) => Some(i as f64),
            ParamValue::Float(f) => Some(f),
            _ => None,
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
            ParamValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Str(s) => write!(f, "{s}"),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "raw-f32")]
    RawF32,
    #[serde(rename = "jsonl")]
    Jsonl,
    #[serde(rename = "synthetic")]
    Synthetic,
}

impl DataFormat {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "raw-f32" => Some(Self::RawF32),
            "jsonl" => Some(Self::Jsonl),
            "synthetic" => Some(Self::Synthetic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::RawF32 => "raw-f32",
            Self::Jsonl => "jsonl",
            Self::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    None,
    Zscore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub dataset_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: DataFormat,
    pub channels: usize,
    pub sampling_rate_hz: f64,
    pub window_length: usize,
    pub normalization: Normalization,
    pub split: SplitFractions,
    pub missingness: MissingnessSpec,
    pub seed: u64,
    /// Generator settings, only consulted for `format: synthetic`.
    pub synthetic: SyntheticProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub enabled: bool,
    pub batch_size: usize,
    pub epochs: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            batch_size: 32,
            epochs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_name: String,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Seed actually used for masks: the missingness seed if set, else the
    /// dataset seed.
    pub fn missingness_seed(&self) -> u64 {
        self.data.missingness.seed.unwrap_or(self.data.seed)
    }

    /// Lowercase hex SHA-256 of the canonical JSON form of the config.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&canonical);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One problem found while parsing or validating a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingSection(String),
    UnknownField(String),
    InvalidValue { path: String, reason: String },
    UnknownModel(String),
    UnknownMissingness(String),
}

/// Violation category, used when matching fixtures against expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    MissingSection,
    UnknownField,
    InvalidValue,
    UnknownModel,
    UnknownMissingness,
}

impl ViolationKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "MissingSection" => Some(Self::MissingSection),
            "UnknownField" => Some(Self::UnknownField),
            "InvalidValue" => Some(Self::InvalidValue),
            "UnknownModel" => Some(Self::UnknownModel),
            "UnknownMissingness" => Some(Self::UnknownMissingness),
            _ => None,
        }
    }
}

impl Violation {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Violation::InvalidValue {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::MissingSection(_) => ViolationKind::MissingSection,
            Violation::UnknownField(_) => ViolationKind::UnknownField,
            Violation::InvalidValue { .. } => ViolationKind::InvalidValue,
            Violation::UnknownModel(_) => ViolationKind::UnknownModel,
            Violation::UnknownMissingness(_) => ViolationKind::UnknownMissingness,
        }
    }

    /// Dotted location in the document the violation refers to.
    pub fn path(&self) -> &str {
        match self {
            Violation::MissingSection(p) | Violation::UnknownField(p) => p,
            Violation::InvalidValue { path, .. } => path,
            Violation::UnknownModel(_) => "model.name",
            Violation::UnknownMissingness(_) => "data.missingness.type",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingSection(s) => write!(f, "missing section `{s}`"),
            Violation::UnknownField(p) => write!(f, "unknown field `{p}`"),
            Violation::InvalidValue { path, reason } => write!(f, "invalid `{path}`: {reason}"),
            Violation::UnknownModel(m) => write!(f, "unknown model `{m}`"),
            Violation::UnknownMissingness(m) => write!(f, "unknown missingness type `{m}`"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid configuration:{}", list(.0))]
    Invalid(Vec<Violation>),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  - {x}")).collect()
}

impl ConfigError {
    /// Violations carried by the error; a syntax or IO error has none.
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Parses a config document in strict mode against the built-in registries.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(
        text,
        &ParseOptions::default(),
        &ImputerRegistry::with_builtins(),
        &MechanismRegistry::with_builtins(),
    )
}

/// Reads and parses a config file.
pub fn load_config_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// All violations of `config` against the built-in registries.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    validate_with(
        config,
        &ImputerRegistry::with_builtins(),
        &MechanismRegistry::with_builtins(),
    )
}

pub fn validate_with(
    config: &ExperimentConfig,
    imputers: &ImputerRegistry,
    mechanisms: &MechanismRegistry,
) -> Vec<Violation> {
    let mut out = Vec::new();

    if !is_safe_identifier(&config.experiment_name) {
        out.push(Violation::invalid(
            "experiment_name",
            "must be non-empty and match [A-Za-z0-9_-]+",
        ));
    }
    validate_data(&config.data, mechanisms, &mut out);

    match imputers.build(&config.model.name, &config.model.params) {
        Err(crate::imputers::BuildError::UnknownModel(name)) => {
            out.push(Violation::UnknownModel(name))
        }
        Err(crate::imputers::BuildError::Params(issues)) => {
            out.extend(issues.into_iter().map(|i| i.into_violation()))
        }
        Ok(imputer) => {
            if imputer.requires_fit() && !config.train.enabled {
                out.push(Violation::invalid(
                    "model.params.scope",
                    "scope=train requires train.enabled=true",
                ));
            }
        }
    }

    if config.train.batch_size < 1 {
        out.push(Violation::invalid("train.batch_size", "must be >= 1"));
    }
    out
}

fn validate_data(data: &DataConfig, mechanisms: &MechanismRegistry, out: &mut Vec<Violation>) {
    if !is_safe_identifier(&data.dataset_name) {
        out.push(Violation::invalid(
            "data.dataset_name",
            "must be non-empty and match [A-Za-z0-9_-]+",
        ));
    }
    match (data.format, &data.path) {
        (DataFormat::Synthetic, Some(_)) => out.push(Violation::invalid(
            "data.path",
            "must be absent for synthetic data",
        )),
        (f, None) if f != DataFormat::Synthetic => out.push(Violation::invalid(
            "data.path",
            format!("required for format {}", f.name()),
        )),
        _ => {}
    }
    if data.channels < 1 {
        out.push(Violation::invalid("data.channels", "must be >= 1"));
    }
    if !(data.sampling_rate_hz.is_finite() && data.sampling_rate_hz > 0.0) {
        out.push(Violation::invalid(
            "data.sampling_rate_hz",
            "must be a positive number",
        ));
    }
    if data.window_length < 4 {
        out.push(Violation::invalid("data.window_length", "must be >= 4"));
    }

    let s = data.split;
    let parts = [s.train, s.val, s.test];
    if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
        out.push(Violation::invalid(
            "data.split",
            "fractions must lie in [0,1]",
        ));
    } else if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        out.push(Violation::invalid("data.split", "fractions must sum to 1"));
    }

    let m = &data.missingness;
    if !mechanisms.contains(&m.kind) {
        out.push(Violation::UnknownMissingness(m.kind.clone()));
    } else {
        out.extend(m.check(data.window_length));
    }

    if data.format == DataFormat::Synthetic {
        out.extend(data.synthetic.check(data.sampling_rate_hz));
    }
}

/// Command-line overrides (`-c`, `-d`, `-train`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CliOverrides {
    pub config_path: Option<PathBuf>,
    pub dataset_name: Option<String>,
    pub train_flag: Option<bool>,
}

impl CliOverrides {
    pub fn is_empty(&self) -> bool {
        self.config_path.is_none() && self.dataset_name.is_none() && self.train_flag.is_none()
    }
}

/// Applies overrides and re-validates.
///
/// A dataset override replaces `data.dataset_name`. Built-in synthetic names
/// switch the format to `synthetic`; any other name is looked up as a
/// directory under `data_root`, and format, path and channel count are taken
/// from what is found there.
pub fn merge_overrides(
    config: &ExperimentConfig,
    overrides: &CliOverrides,
    data_root: &Path,
) -> Result<ExperimentConfig, ConfigError> {
    let mut merged = config.clone();
    let mut extra = Vec::new();

    if let Some(name) = &overrides.dataset_name {
        merged.data.dataset_name = name.clone();
        if dataset::is_builtin_synthetic(name) {
            merged.data.format = DataFormat::Synthetic;
            merged.data.path = None;
        } else {
            let dir = data_root.join(name);
            match dataset::probe_dataset_dir(&dir) {
                Ok(probe) => {
                    merged.data.format = probe.format;
                    merged.data.path = Some(dir);
                    merged.data.channels = probe.channels;
                    if let Some(rate) = probe.sampling_rate_hz {
                        merged.data.sampling_rate_hz = rate;
                    }
                }
                Err(e) => extra.push(Violation::invalid(
                    "data.dataset_name",
                    format!(
                        "no usable dataset `{name}` under {}: {e}",
                        data_root.display()
                    ),
                )),
            }
        }
    }
    if let Some(flag) = overrides.train_flag {
        merged.train.enabled = flag;
    }

    let mut violations = validate(&merged);
    violations.extend(extra);
    if violations.is_empty() {
        Ok(merged)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}
