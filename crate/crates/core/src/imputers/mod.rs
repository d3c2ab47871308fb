//! Imputer interface, registry and the classical imputers.
//!
//! New models only implement [`Imputer::impute`] (the forward pass); fitting,
//! batching, timing and error tagging are shared. Closures can be registered
//! directly with [`ImputerRegistry::register_forward`].

mod linear;
mod mean;
mod spectral;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ParamValue, Params, Violation};
use crate::evaluation::ImputationResult;
use crate::missingness::MaskedSample;
use crate::signal::{Sample, SignalSet};

pub use linear::{interpolate_channel, LinearInterp};
pub use mean::{MeanFill, MeanScope};
pub use spectral::{
    dft, impute_channel_fft, select_bins, sparse_reconstruct, FftImputer, FftParams,
};

pub const MEAN_FILL: &str = "mean_fill";
pub const LINEAR_INTERP: &str = "linear_interp";
pub const FFT: &str = "fft";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImputeError {
    #[error("channel {0} has no observed points")]
    ChannelFullyMissing(usize),
    #[error("channel {channel} has {observed} observed point(s), at least 2 are needed")]
    InsufficientObserved { channel: usize, observed: usize },
    #[error("imputer needs a fitted state; run fit first")]
    MissingFitState,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid value: {0}")]
    InvalidValue(String),
}

/// An [`ImputeError`] tagged with the sample it happened on.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("sample `{sample_id}`: {source}")]
pub struct SampleError {
    pub sample_id: String,
    #[source]
    pub source: ImputeError,
}

/// State produced by [`Imputer::fit`]; empty for stateless imputers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FittedState {
    /// Per-channel training means (mean fill with train scope).
    pub channel_means: Vec<f64>,
}

impl FittedState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_means.is_empty()
    }

    /// Little-endian `f64` values, one per channel.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.channel_means
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if !bytes.len().is_multiple_of(8) {
            return None;
        }
        let channel_means = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Some(Self { channel_means })
    }
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputed {
    pub values: Vec<Vec<f64>>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

impl Imputed {
    pub fn plain(values: Vec<Vec<f64>>) -> Self {
        Self {
            values,
            iterations: None,
            converged: None,
        }
    }
}

pub trait Imputer: Send + Sync {
    fn name(&self) -> &str;

    /// Whether [`Imputer::impute`] needs a non-empty [`FittedState`].
    fn requires_fit(&self) -> bool {
        false
    }

    fn fit(&self, _train: &SignalSet) -> Result<FittedState, ImputeError> {
        Ok(FittedState::empty())
    }

    /// Fills every position of `masked.input_mask()`. Observed positions
    /// must come back unchanged.
    fn impute(&self, masked: &MaskedSample, state: &FittedState) -> Result<Imputed, ImputeError>;
}

/// Problem with one entry of `model.params`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamIssue {
    Unknown(String),
    Invalid { key: String, reason: String },
}

impl ParamIssue {
    pub fn into_violation(self) -> Violation {
        match self {
            ParamIssue::Unknown(k) => Violation::UnknownField(format!("model.params.{k}")),
            ParamIssue::Invalid { key, reason } => {
                Violation::invalid(format!("model.params.{key}"), reason)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildError {
    UnknownModel(String),
    Params(Vec<ParamIssue>),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::UnknownModel(m) => write!(f, "unknown model `{m}`"),
            BuildError::Params(issues) => {
                let parts: Vec<String> = issues
                    .iter()
                    .map(|i| i.clone().into_violation().to_string())
                    .collect();
                write!(f, "{}", parts.join("; "))
            }
        }
    }
}

impl std::error::Error for BuildError {}

/// Reads typed parameters and remembers which keys were consumed, so leftover
/// keys can be reported as unknown.
pub struct ParamReader<'a> {
    params: &'a Params,
    used: Vec<&'a str>,
    issues: Vec<ParamIssue>,
}

impl<'a> ParamReader<'a> {
    pub fn new(params: &'a Params) -> Self {
        Self {
            params,
            used: Vec::new(),
            issues: Vec::new(),
        }
    }

    fn take(&mut self, key: &'a str) -> Option<&'a ParamValue> {
        self.used.push(key);
        self.params.get(key)
    }

    fn invalid(&mut self, key: &str, reason: impl Into<String>) {
        self.issues.push(ParamIssue::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        });
    }

    pub fn positive_int(&mut self, key: &'a str, default: usize) -> usize {
        match self.take(key) {
            None => default,
            Some(v) => match v.as_i64() {
                Some(i) if i >= 1 => i as usize,
                _ => {
                    self.invalid(key, "must be a positive integer");
                    default
                }
            },
        }
    }

    pub fn positive_real(&mut self, key: &'a str, default: f64) -> f64 {
        match self.take(key) {
            None => default,
            Some(v) => match v.as_f64() {
                Some(x) if x > 0.0 && x.is_finite() => x,
                _ => {
                    self.invalid(key, "must be a positive number");
                    default
                }
            },
        }
    }

    /// String parameter restricted to `choices`; the first choice is the
    /// default.
    pub fn choice(&mut self, key: &'a str, choices: &[&'static str]) -> &'static str {
        match self.take(key) {
            None => choices[0],
            Some(v) => match v.as_str().and_then(|s| choices.iter().find(|c| **c == s)) {
                Some(c) => c,
                None => {
                    self.invalid(key, format!("must be one of {}", choices.join(", ")));
                    choices[0]
                }
            },
        }
    }

    /// Unknown keys plus any invalid values, or `Ok` when clean.
    pub fn finish(self) -> Result<(), Vec<ParamIssue>> {
        let mut issues: Vec<ParamIssue> = self
            .params
            .keys()
            .filter(|k| !self.used.contains(&k.as_str()))
            .map(|k| ParamIssue::Unknown(k.clone()))
            .collect();
        issues.extend(self.issues);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }
}

type Factory = dyn Fn(&Params) -> Result<Box<dyn Imputer>, Vec<ParamIssue>> + Send + Sync;

/// Name → imputer constructor.
#[derive(Clone)]
pub struct ImputerRegistry {
    factories: BTreeMap<String, Arc<Factory>>,
}

impl fmt::Debug for ImputerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.factories.keys()).finish()
    }
}

impl Default for ImputerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ImputerRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(MEAN_FILL, |p| Ok(Box::new(MeanFill::from_params(p)?)));
        r.register(LINEAR_INTERP, |p| {
            Ok(Box::new(LinearInterp::from_params(p)?))
        });
        r.register(FFT, |p| Ok(Box::new(FftImputer::from_params(p)?)));
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&Params) -> Result<Box<dyn Imputer>, Vec<ParamIssue>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    /// Registers a model given only its forward pass. The closure receives the
    /// masked sample and returns full `channels × T` values; observed
    /// positions are restored from the input afterwards. The model accepts no
    /// parameters.
    pub fn register_forward<F>(&mut self, name: &str, forward: F)
    where
        F: Fn(&MaskedSample) -> Result<Vec<Vec<f64>>, ImputeError> + Send + Sync + 'static,
    {
        let forward = Arc::new(forward);
        let owned = name.to_string();
        self.register(name, move |p| {
            ParamReader::new(p).finish()?;
            Ok(Box::new(ForwardImputer {
                name: owned.clone(),
                forward: forward.clone(),
            }))
        });
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<Box<dyn Imputer>, BuildError> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| BuildError::UnknownModel(name.to_string()))?;
        factory(params).map_err(BuildError::Params)
    }
}

type Forward = dyn Fn(&MaskedSample) -> Result<Vec<Vec<f64>>, ImputeError> + Send + Sync;

struct ForwardImputer {
    name: String,
    forward: Arc<Forward>,
}

impl Imputer for ForwardImputer {
    fn name(&self) -> &str {
        &self.name
    }

    fn impute(&self, masked: &MaskedSample, _: &FittedState) -> Result<Imputed, ImputeError> {
        let mut values = (self.forward)(masked)?;
        let input = &masked.observed.values;
        if values.len() != input.len() || values.iter().zip(input).any(|(a, b)| a.len() != b.len())
        {
            return Err(ImputeError::InvalidValue(format!(
                "`{}` returned the wrong shape",
                self.name
            )));
        }
        let mask = masked.input_mask();
        for (c, row) in values.iter_mut().enumerate() {
            for (t, v) in row.iter_mut().enumerate() {
                if !mask.get(c, t) {
                    *v = input[c][t];
                }
            }
        }
        Ok(Imputed::plain(values))
    }
}

/// Observed positions of one channel as `(index, value)` pairs.
pub(crate) fn observed_points(values: &[f64], missing: &[bool]) -> Vec<(usize, f64)> {
    values
        .iter()
        .zip(missing)
        .enumerate()
        .filter(|(_, (_, &m))| !m)
        .map(|(t, (&v, _))| (t, v))
        .collect()
}

fn run_one(
    imputer: &dyn Imputer,
    state: &FittedState,
    masked: &MaskedSample,
) -> Result<ImputationResult, SampleError> {
    let start = Instant::now();
    let out = imputer
        .impute(masked, state)
        .map_err(|source| SampleError {
            sample_id: masked.id().to_string(),
            source,
        })?;
    Ok(ImputationResult {
        sample_id: masked.id().to_string(),
        model_name: imputer.name().to_string(),
        imputed: Sample {
            id: masked.id().to_string(),
            values: out.values,
            source_missing: masked.ground_truth.source_missing.clone(),
        },
        iterations: out.iterations,
        converged: out.converged,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Imputes every sample, keeping going past failures. Entries are in input
/// order; samples within a batch run in parallel.
pub fn impute_batch_partial(
    imputer: &dyn Imputer,
    state: &FittedState,
    masked: &[MaskedSample],
    batch_size: usize,
) -> Vec<Result<ImputationResult, SampleError>> {
    let batch_size = batch_size.max(1);
    let mut out = Vec::with_capacity(masked.len());
    for chunk in masked.chunks(batch_size) {
        let results: Vec<_> = chunk
            .par_iter()
            .map(|m| run_one(imputer, state, m))
            .collect();
        out.extend(results);
    }
    out
}

/// Like [`impute_batch_partial`] but fails on the first (in input order)
/// sample error.
pub fn impute_batch(
    imputer: &dyn Imputer,
    state: &FittedState,
    masked: &[MaskedSample],
    batch_size: usize,
) -> Result<Vec<ImputationResult>, SampleError> {
    impute_batch_partial(imputer, state, masked, batch_size)
        .into_iter()
        .collect()
}
