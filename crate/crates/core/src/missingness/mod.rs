//! Missingness simulation.
//!
//! A [`Mechanism`] turns a sample shape and a seeded generator into a
//! [`Mask`]; applying it yields a [`MaskedSample`] that keeps the ground
//! truth next to the zeroed observation. Mechanisms are looked up by name
//! in a [`MechanismRegistry`], which callers can extend.

mod mechanisms;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Violation;
use crate::rng::{derive_seed, rng_from_seed};
use crate::signal::{Mask, Sample, SignalSet};

pub use mechanisms::{
    extended_row, load_pattern_file, mcar_row, transient_row, Extended, McarPoints, PatternFile,
    Transient,
};

pub const DEFAULT_MAX_GAP: usize = 50;
/// Gap-length draws attempted by the transient mechanism before giving up.
pub const PLACEMENT_ATTEMPTS: usize = 100;

pub const EXTENDED: &str = "extended";
pub const TRANSIENT: &str = "transient";
pub const MCAR_POINTS: &str = "mcar_points";
pub const PATTERN_FILE: &str = "pattern_file";

/// `data.missingness` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub percent: f64,
    pub max_gap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_path: Option<PathBuf>,
    pub per_channel: bool,
    /// Falls back to the dataset seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MissingnessSpec {
    fn base(kind: &str, percent: f64) -> Self {
        Self {
            kind: kind.to_string(),
            percent,
            max_gap: DEFAULT_MAX_GAP,
            pattern_path: None,
            per_channel: false,
            seed: None,
        }
    }

    pub fn extended(percent: f64) -> Self {
        Self::base(EXTENDED, percent)
    }

    pub fn transient(percent: f64, max_gap: usize) -> Self {
        Self {
            max_gap,
            ..Self::base(TRANSIENT, percent)
        }
    }

    pub fn mcar_points(percent: f64) -> Self {
        Self::base(MCAR_POINTS, percent)
    }

    pub fn pattern_file(path: impl Into<PathBuf>) -> Self {
        Self {
            pattern_path: Some(path.into()),
            ..Self::base(PATTERN_FILE, 0.0)
        }
    }

    /// Field checks for a window of `window_length` timesteps.
    pub fn check(&self, window_length: usize) -> Vec<Violation> {
        const P: &str = "data.missingness.percent";
        let mut out = Vec::new();
        if self.kind != PATTERN_FILE {
            let needs_positive = self.kind == EXTENDED || self.kind == TRANSIENT;
            if !(0.0..1.0).contains(&self.percent) {
                out.push(Violation::invalid(P, "must lie in [0,1)"));
            } else if needs_positive && self.percent == 0.0 {
                out.push(Violation::invalid(
                    P,
                    format!("must be > 0 for {} missingness", self.kind),
                ));
            } else if self.percent > 0.0 && self.percent * (window_length as f64) < 1.0 {
                out.push(Violation::invalid(
                    P,
                    "percent·window_length must be >= 1 (no missing point otherwise)",
                ));
            }
        }
        if self.kind == TRANSIENT && self.max_gap < 1 {
            out.push(Violation::invalid(
                "data.missingness.max_gap",
                "must be >= 1",
            ));
        }
        if self.kind == PATTERN_FILE && self.pattern_path.is_none() {
            out.push(Violation::invalid(
                "data.missingness.pattern_path",
                "required for pattern_file missingness",
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum MissingnessError {
    #[error("unknown missingness type `{0}`")]
    UnknownMissingness(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("could not place {missing} missing timesteps as gaps of at most {max_gap} in {len} timesteps after {attempts} attempts")]
    PlacementFailure {
        missing: usize,
        max_gap: usize,
        len: usize,
        attempts: usize,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("channel {0} has fewer than 2 observed points")]
    ChannelFullyMissing(usize),
}

/// A missingness mechanism: produces a mask for one sample shape.
pub trait Mechanism: Send + Sync {
    fn name(&self) -> &str;

    fn generate(
        &self,
        channels: usize,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mask, MissingnessError>;
}

type Factory =
    dyn Fn(&MissingnessSpec) -> Result<Box<dyn Mechanism>, MissingnessError> + Send + Sync;

/// Name → mechanism constructor.
#[derive(Clone)]
pub struct MechanismRegistry {
    factories: BTreeMap<String, Arc<Factory>>,
}

impl fmt::Debug for MechanismRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.factories.keys()).finish()
    }
}

impl MechanismRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(EXTENDED, |s| {
            Ok(Box::new(Extended {
                percent: s.percent,
                per_channel: s.per_channel,
            }))
        });
        r.register(TRANSIENT, |s| {
            Ok(Box::new(Transient {
                percent: s.percent,
                max_gap: s.max_gap,
                per_channel: s.per_channel,
            }))
        });
        r.register(MCAR_POINTS, |s| {
            Ok(Box::new(McarPoints {
                percent: s.percent,
                per_channel: s.per_channel,
            }))
        });
        r.register(PATTERN_FILE, |s| {
            let path = s.pattern_path.as_ref().ok_or_else(|| {
                MissingnessError::InvalidValue("pattern_file needs pattern_path".into())
            })?;
            Ok(Box::new(PatternFile {
                rows: load_pattern_file(path)?,
                per_channel: s.per_channel,
            }))
        });
        r
    }

    /// Registers (or replaces) a mechanism constructor under `name`.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&MissingnessSpec) -> Result<Box<dyn Mechanism>, MissingnessError>
            + Send
            + Sync
            + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    /// Builds the mechanism registered under `spec.kind`.
    pub fn dispatch(&self, spec: &MissingnessSpec) -> Result<Box<dyn Mechanism>, MissingnessError> {
        let factory = self
            .factories
            .get(&spec.kind)
            .ok_or_else(|| MissingnessError::UnknownMissingness(spec.kind.clone()))?;
        factory(spec)
    }
}

impl Default for MechanismRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// A sample with simulated missingness and its untouched original.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSample {
    /// Ground truth with every input-missing position set to 0.
    pub observed: Sample,
    /// Simulated missingness.
    pub mask: Mask,
    pub ground_truth: Sample,
}

impl MaskedSample {
    pub fn new(ground_truth: Sample, mask: Mask) -> Result<Self, MissingnessError> {
        if !mask.same_shape(ground_truth.channels(), ground_truth.window_length()) {
            return Err(MissingnessError::InvalidValue(format!(
                "mask shape {}×{} does not match sample {}×{}",
                mask.channels(),
                mask.len(),
                ground_truth.channels(),
                ground_truth.window_length()
            )));
        }
        let mut observed = ground_truth.clone();
        let input = match &ground_truth.source_missing {
            Some(src) => mask.union(src),
            None => mask.clone(),
        };
        for (c, row) in observed.values.iter_mut().enumerate() {
            for (t, v) in row.iter_mut().enumerate() {
                if input.get(c, t) {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            observed,
            mask,
            ground_truth,
        })
    }

    pub fn id(&self) -> &str {
        &self.ground_truth.id
    }

    /// Positions the imputer must fill: simulated plus source-level gaps.
    pub fn input_mask(&self) -> Mask {
        match &self.ground_truth.source_missing {
            Some(src) => self.mask.union(src),
            None => self.mask.clone(),
        }
    }

    /// Positions with known truth that were hidden by the simulation.
    pub fn scored_mask(&self) -> Mask {
        match &self.ground_truth.source_missing {
            Some(src) => self.mask.minus(src),
            None => self.mask.clone(),
        }
    }
}

/// Applies `mechanism` to one sample with a generator seeded by `seed`.
pub fn apply(
    mechanism: &dyn Mechanism,
    sample: &Sample,
    seed: u64,
) -> Result<MaskedSample, MissingnessError> {
    let mut rng = rng_from_seed(seed);
    let mask = mechanism.generate(sample.channels(), sample.window_length(), &mut rng)?;
    MaskedSample::new(sample.clone(), mask)
}

pub fn apply_extended(
    sample: &Sample,
    percent: f64,
    seed: u64,
    per_channel: bool,
) -> Result<MaskedSample, MissingnessError> {
    apply(
        &Extended {
            percent,
            per_channel,
        },
        sample,
        seed,
    )
}

pub fn apply_transient(
    sample: &Sample,
    percent: f64,
    max_gap: usize,
    seed: u64,
    per_channel: bool,
) -> Result<MaskedSample, MissingnessError> {
    apply(
        &Transient {
            percent,
            max_gap,
            per_channel,
        },
        sample,
        seed,
    )
}

pub fn apply_mcar_points(
    sample: &Sample,
    percent: f64,
    seed: u64,
    per_channel: bool,
) -> Result<MaskedSample, MissingnessError> {
    apply(
        &McarPoints {
            percent,
            per_channel,
        },
        sample,
        seed,
    )
}

pub fn apply_pattern(
    sample: &Sample,
    pattern_path: &std::path::Path,
    seed: u64,
    per_channel: bool,
) -> Result<MaskedSample, MissingnessError> {
    let mech = PatternFile {
        rows: load_pattern_file(pattern_path)?,
        per_channel,
    };
    apply(&mech, sample, seed)
}

/// Rejects samples where some channel keeps fewer than 2 observed points.
pub fn min_observed_guard(masked: MaskedSample) -> Result<MaskedSample, MissingnessError> {
    let input = masked.input_mask();
    for c in 0..input.channels() {
        let observed = input.row(c).iter().filter(|&&m| !m).count();
        if observed < 2 {
            return Err(MissingnessError::ChannelFullyMissing(c));
        }
    }
    Ok(masked)
}

/// Masks every sample of `set`; sample `i` uses `derive_seed(seed, i)`.
///
/// Each entry is either the guarded masked sample or the error for that
/// sample, in input order.
pub fn mask_set(
    set: &SignalSet,
    mechanism: &dyn Mechanism,
    seed: u64,
) -> Vec<Result<MaskedSample, MissingnessError>> {
    set.samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| apply(mechanism, s, derive_seed(seed, i as u64)).and_then(min_observed_guard))
        .collect()
}
