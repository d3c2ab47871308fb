//! Viewer bundle (`bundle.json`, version 1).
//!
//! One entry per sample (per sample and channel for multi-channel data)
//! holding the full ground truth, the simulated missing runs and each
//! model's imputation around those runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{ImputationResult, SampleScore};
use crate::missingness::MaskedSample;
use crate::signal::runs_of;

pub const BUNDLE_VERSION: u32 = 1;

/// Context kept on each side of a missing run in imputation segments.
pub const CONTEXT_MARGIN: usize = 100;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("bundle needs at least one model")]
    NoModels,
    #[error("cannot read bundle {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessInfo {
    #[serde(rename = "type")]
    pub kind: String,
    pub percent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSample {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    pub truth: Vec<f64>,
    /// `[start, len]` pairs.
    pub missing_runs: Vec<[usize; 2]>,
    pub imputations: BTreeMap<String, Vec<Segment>>,
    pub metrics: BTreeMap<String, Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub version: u32,
    pub experiment: String,
    pub missingness: MissingnessInfo,
    pub sampling_rate_hz: f64,
    pub models: Vec<String>,
    pub samples: Vec<BundleSample>,
}

/// Bundle-level metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleMeta {
    pub experiment: String,
    pub missingness: MissingnessInfo,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
}

/// Segments covering each run plus `margin` on both sides, clipped to
/// `[0, len)`. Runs whose padded spans overlap share one segment.
pub fn segment_spans(runs: &[(usize, usize)], len: usize, margin: usize) -> Vec<(usize, usize)> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for &(start, l) in runs {
        let lo = start.saturating_sub(margin);
        let hi = (start + l + margin).min(len);
        match spans.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => spans.push((lo, hi)),
        }
    }
    spans
}

/// Builds the comparison bundle.
///
/// `results` maps model name to that model's results; every model must cover
/// exactly the samples in `truth`. `scores` provides the per-sample metrics
/// shown next to each model.
pub fn export_bundle(
    meta: &BundleMeta,
    truth: &[MaskedSample],
    results: &BTreeMap<String, Vec<ImputationResult>>,
    scores: &BTreeMap<String, Vec<SampleScore>>,
) -> Result<Bundle, BundleError> {
    if results.is_empty() {
        return Err(BundleError::NoModels);
    }
    let mut by_model: BTreeMap<&str, BTreeMap<&str, &ImputationResult>> = BTreeMap::new();
    for (model, rs) in results {
        let index: BTreeMap<&str, &ImputationResult> =
            rs.iter().map(|r| (r.sample_id.as_str(), r)).collect();
        for m in truth {
            if !index.contains_key(m.id()) {
                return Err(BundleError::Alignment(format!(
                    "model `{model}` has no result for sample `{}`",
                    m.id()
                )));
            }
        }
        if let Some(extra) = rs
            .iter()
            .find(|r| !truth.iter().any(|m| m.id() == r.sample_id))
        {
            return Err(BundleError::Alignment(format!(
                "model `{model}` has a result for unknown sample `{}`",
                extra.sample_id
            )));
        }
        by_model.insert(model.as_str(), index);
    }

    let mut samples = Vec::new();
    for m in truth {
        let channels = m.ground_truth.channels();
        for c in 0..channels {
            let truth_row = &m.ground_truth.values[c];
            let len = truth_row.len();
            let runs = runs_of(m.mask.row(c));
            let spans = segment_spans(&runs, len, CONTEXT_MARGIN);
            let imputations = by_model
                .iter()
                .map(|(model, index)| {
                    let row = &index[m.id()].imputed.values[c];
                    let segs = spans
                        .iter()
                        .map(|&(lo, hi)| Segment {
                            start: lo,
                            values: row[lo..hi].to_vec(),
                        })
                        .collect();
                    (model.to_string(), segs)
                })
                .collect();
            let metrics = scores
                .iter()
                .filter_map(|(model, ss)| {
                    ss.iter().find(|s| s.sample_id == m.id()).map(|s| {
                        (
                            model.clone(),
                            Metrics {
                                mse: s.mse,
                                mae: s.mae,
                            },
                        )
                    })
                })
                .collect();
            let (id, channel) = if channels == 1 {
                (m.id().to_string(), None)
            } else {
                let name = meta
                    .channel_names
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| format!("ch{c}"));
                (format!("{}:{name}", m.id()), Some(name))
            };
            samples.push(BundleSample {
                id,
                channel,
                truth: truth_row.clone(),
                missing_runs: runs.iter().map(|&(s, l)| [s, l]).collect(),
                imputations,
                metrics,
            });
        }
    }

    Ok(Bundle {
        version: BUNDLE_VERSION,
        experiment: meta.experiment.clone(),
        missingness: meta.missingness.clone(),
        sampling_rate_hz: meta.sampling_rate_hz,
        models: results.keys().cloned().collect(),
        samples,
    })
}

impl Bundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, BundleError> {
        let err = |message: String| BundleError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let b: Bundle = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if b.version != BUNDLE_VERSION {
            return Err(err(format!("unsupported bundle version {}", b.version)));
        }
        Ok(b)
    }

    /// Combines single-model bundles of the same data into one comparison
    /// bundle. Sample ids, truth and missing runs must agree.
    pub fn merge(bundles: &[Bundle]) -> Result<Bundle, BundleError> {
        let (first, rest) = bundles.split_first().ok_or(BundleError::NoModels)?;
        let mut out = first.clone();
        for b in rest {
            if b.missingness != out.missingness {
                return Err(BundleError::Alignment(format!(
                    "missingness differs: {} {} vs {} {}",
                    out.missingness.kind,
                    out.missingness.percent,
                    b.missingness.kind,
                    b.missingness.percent
                )));
            }
            if b.samples.len() != out.samples.len() {
                return Err(BundleError::Alignment(format!(
                    "sample counts differ: {} vs {}",
                    out.samples.len(),
                    b.samples.len()
                )));
            }
            for (dst, src) in out.samples.iter_mut().zip(&b.samples) {
                if dst.id != src.id
                    || dst.truth != src.truth
                    || dst.missing_runs != src.missing_runs
                {
                    return Err(BundleError::Alignment(format!(
                        "sample `{}` does not match `{}`",
                        dst.id, src.id
                    )));
                }
                for (model, segs) in &src.imputations {
                    dst.imputations.insert(model.clone(), segs.clone());
                }
                for (model, m) in &src.metrics {
                    dst.metrics.insert(model.clone(), *m);
                }
            }
            for model in &b.models {
                if !out.models.contains(model) {
                    out.models.push(model.clone());
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Mask, Sample};

    fn masked(id: &str, len: usize, runs: &[(usize, usize)]) -> MaskedSample {
        let mut row = vec![false; len];
        for &(s, l) in runs {
            row[s..s + l].fill(true);
        }
        let truth = Sample::new(id, vec![(0..len).map(|t| t as f64).collect()]);
        MaskedSample::new(truth, Mask::from_rows(vec![row])).unwrap()
    }

    fn result(model: &str, m: &MaskedSample) -> ImputationResult {
        ImputationResult {
            sample_id: m.id().into(),
            model_name: model.into(),
            imputed: Sample::new(m.id(), vec![vec![-1.0; m.ground_truth.window_length()]]),
            iterations: None,
            converged: None,
            wall_time_s: 0.0,
        }
    }

    fn meta() -> BundleMeta {
        BundleMeta {
            experiment: "e".into(),
            missingness: MissingnessInfo {
                kind: "extended".into(),
                percent: 0.1,
            },
            sampling_rate_hz: 100.0,
            channel_names: vec!["ch0".into()],
        }
    }

    #[test]
    fn shape_two_models_three_samples() {
        let truth: Vec<_> = (0..3)
            .map(|i| masked(&format!("s{i}"), 500, &[(200, 50)]))
            .collect();
        let mut results = BTreeMap::new();
        for model in ["a", "b"] {
            results.insert(
                model.to_string(),
                truth.iter().map(|m| result(model, m)).collect(),
            );
        }
        let b = export_bundle(&meta(), &truth, &results, &BTreeMap::new()).unwrap();
        assert_eq!(b.samples.len(), 3);
        assert_eq!(b.models, vec!["a", "b"]);
        for s in &b.samples {
            assert_eq!(s.imputations.len(), 2);
            assert_eq!(s.missing_runs, vec![[200, 50]]);
            let seg = &s.imputations["a"][0];
            assert_eq!(seg.start, 100);
            assert_eq!(seg.values.len(), 250);
        }
    }

    #[test]
    fn two_runs_clipped_at_bounds() {
        let truth = vec![masked("s", 1000, &[(30, 20), (900, 50)])];
        let mut results = BTreeMap::new();
        results.insert("m".to_string(), vec![result("m", &truth[0])]);
        let b = export_bundle(&meta(), &truth, &results, &BTreeMap::new()).unwrap();
        let segs = &b.samples[0].imputations["m"];
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].start, segs[0].values.len()), (0, 150));
        assert_eq!((segs[1].start, segs[1].values.len()), (800, 200));
    }

    #[test]
    fn overlapping_margins_merge() {
        assert_eq!(
            segment_spans(&[(100, 10), (250, 10)], 1000, 100),
            vec![(0, 360)]
        );
        assert_eq!(segment_spans(&[], 10, 100), vec![]);
    }

    #[test]
    fn disjoint_ids_fail_alignment() {
        let truth = vec![masked("s0", 300, &[(10, 5)])];
        let other = masked("zz", 300, &[(10, 5)]);
        let mut results = BTreeMap::new();
        results.insert("m".to_string(), vec![result("m", &other)]);
        assert!(matches!(
            export_bundle(&meta(), &truth, &results, &BTreeMap::new()),
            Err(BundleError::Alignment(_))
        ));
        assert!(matches!(
            export_bundle(&meta(), &truth, &BTreeMap::new(), &BTreeMap::new()),
            Err(BundleError::NoModels)
        ));
    }

    #[test]
    fn merge_combines_models_and_checks_alignment() {
        let truth = vec![masked("s0", 300, &[(10, 5)])];
        let single = |model: &str| {
            let mut r = BTreeMap::new();
            r.insert(model.to_string(), vec![result(model, &truth[0])]);
            export_bundle(&meta(), &truth, &r, &BTreeMap::new()).unwrap()
        };
        let merged = Bundle::merge(&[single("a"), single("b")]).unwrap();
        assert_eq!(merged.models, vec!["a", "b"]);
        assert_eq!(merged.samples[0].imputations.len(), 2);

        let mut off = single("c");
        off.samples[0].id = "other".into();
        assert!(matches!(
            Bundle::merge(&[single("a"), off]),
            Err(BundleError::Alignment(_))
        ));
    }
}
