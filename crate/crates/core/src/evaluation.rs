//! Scores restricted to the missing region.
//!
//! Every in-scope imputer returns observed points unchanged, so only
//! positions hidden by the simulated mask carry information.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Mask, Sample};

/// Imputed waveform for one sample from one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub sample_id: String,
    pub model_name: String,
    pub imputed: Sample,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_time_s: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("mask has no missing positions; score is undefined")]
    EmptyMask,
    #[error("no scores to aggregate")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

fn check_shapes(truth: &Sample, imputed: &Sample, mask: &Mask) -> Result<(), EvalError> {
    let (c, t) = (truth.channels(), truth.window_length());
    if imputed.channels() != c || imputed.window_length() != t || !mask.same_shape(c, t) {
        return Err(EvalError::ShapeMismatch(format!(
            "truth {c}×{t}, imputed {}×{}, mask {}×{}",
            imputed.channels(),
            imputed.window_length(),
            mask.channels(),
            mask.len()
        )));
    }
    Ok(())
}

/// Mean of `f(truth − imputed)` over missing positions, with the count.
fn masked_mean(
    truth: &Sample,
    imputed: &Sample,
    mask: &Mask,
    f: impl Fn(f64) -> f64,
) -> Result<(f64, usize), EvalError> {
    check_shapes(truth, imputed, mask)?;
    let mut n = 0usize;
    let mut acc = 0.0;
    for (c, (a, b)) in truth.values.iter().zip(&imputed.values).enumerate() {
        for (t, (&x, &y)) in a.iter().zip(b).enumerate() {
            if mask.get(c, t) {
                n += 1;
                acc += f(x - y);
            }
        }
    }
    if n == 0 {
        return Err(EvalError::EmptyMask);
    }
    Ok((acc / n as f64, n))
}

pub fn mse_missing(
    truth: &Sample,
    imputed: &Sample,
    mask: &Mask,
) -> Result<(f64, usize), EvalError> {
    masked_mean(truth, imputed, mask, |d| d * d)
}

pub fn mae_missing(
    truth: &Sample,
    imputed: &Sample,
    mask: &Mask,
) -> Result<(f64, usize), EvalError> {
    masked_mean(truth, imputed, mask, f64::abs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub mse: f64,
    pub mae: f64,
    pub n_missing: usize,
}

/// Both metrics for one sample.
pub fn score_sample(
    sample_id: &str,
    truth: &Sample,
    imputed: &Sample,
    mask: &Mask,
) -> Result<SampleScore, EvalError> {
    let (mse, n_missing) = mse_missing(truth, imputed, mask)?;
    let (mae, _) = mae_missing(truth, imputed, mask)?;
    Ok(SampleScore {
        sample_id: sample_id.to_string(),
        mse,
        mae,
        n_missing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateScore {
    pub mse: f64,
    pub mae: f64,
}

/// Missing-count-weighted means, summed in the given order.
pub fn aggregate(scores: &[SampleScore]) -> Result<AggregateScore, EvalError> {
    let total: usize = scores.iter().map(|s| s.n_missing).sum();
    if scores.is_empty() || total == 0 {
        return Err(EvalError::EmptyDataset);
    }
    let mut mse = 0.0;
    let mut mae = 0.0;
    for s in scores {
        mse += s.mse * s.n_missing as f64;
        mae += s.mae * s.n_missing as f64;
    }
    Ok(AggregateScore {
        mse: mse / total as f64,
        mae: mae / total as f64,
    })
}

/// A sample that could not be imputed or scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub error: String,
}

/// Test-score document written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub experiment_name: String,
    pub model_name: String,
    pub n_samples: usize,
    pub per_sample: Vec<SampleScore>,
    pub aggregate: AggregateScore,
    pub config_digest: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<SampleFailure>,
}

impl EvaluationReport {
    pub fn new(
        experiment_name: &str,
        model_name: &str,
        per_sample: Vec<SampleScore>,
        config_digest: String,
        seed: u64,
    ) -> Result<Self, EvalError> {
        let aggregate = aggregate(&per_sample)?;
        Ok(Self {
            experiment_name: experiment_name.to_string(),
            model_name: model_name.to_string(),
            n_samples: per_sample.len(),
            per_sample,
            aggregate,
            config_digest,
            seed,
            failures: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
