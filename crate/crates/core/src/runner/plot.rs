//! Static SVG comparison plot for one bundle sample.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::bundle::{Bundle, BundleError, MissingnessInfo};
use super::write_atomic;

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 400.0;
const PAD_LEFT: f64 = 50.0;
const PAD_RIGHT: f64 = 170.0;
const PAD_Y: f64 = 20.0;
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Error)]
pub enum VisualizeError {
    #[error("no results for model `{model}`: {reason}")]
    MissingResults { model: String, reason: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What to plot and where to save it.
#[derive(Debug, Clone)]
pub struct VisualizeRequest {
    pub results_root: PathBuf,
    pub experiment: String,
    /// When set, each model's bundle must have been produced under this
    /// missingness setting.
    pub missingness: Option<MissingnessInfo>,
    pub models: Vec<String>,
    pub sample_index: usize,
    pub x_range: usize,
    pub save_path: PathBuf,
}

/// Reads `results_root/<experiment>/<model>/bundle.json` for every model and
/// merges them.
pub fn load_comparison(
    results_root: &Path,
    experiment: &str,
    missingness: Option<&MissingnessInfo>,
    models: &[String],
) -> Result<Bundle, VisualizeError> {
    if models.is_empty() {
        return Err(VisualizeError::InvalidValue(
            "at least one model is required".into(),
        ));
    }
    let mut bundles = Vec::with_capacity(models.len());
    for model in models {
        let path = results_root
            .join(experiment)
            .join(model)
            .join("bundle.json");
        if !path.is_file() {
            return Err(VisualizeError::MissingResults {
                model: model.clone(),
                reason: format!("{} not found", path.display()),
            });
        }
        let b = Bundle::read(&path)?;
        if let Some(want) = missingness {
            if b.missingness.kind != want.kind
                || (b.missingness.percent - want.percent).abs() > 1e-9
            {
                return Err(VisualizeError::MissingResults {
                    model: model.clone(),
                    reason: format!(
                        "stored run used {} {}, requested {} {}",
                        b.missingness.kind, b.missingness.percent, want.kind, want.percent
                    ),
                });
            }
        }
        bundles.push(b);
    }
    Ok(Bundle::merge(&bundles)?)
}

/// Loads the requested models, renders the plot and writes it to
/// `save_path`.
pub fn visualize_standalone(req: &VisualizeRequest) -> Result<PathBuf, VisualizeError> {
    let bundle = load_comparison(
        &req.results_root,
        &req.experiment,
        req.missingness.as_ref(),
        &req.models,
    )?;
    let svg = render_svg(&bundle, req.sample_index, req.x_range)?;
    write_atomic(&req.save_path, svg.as_bytes()).map_err(|source| VisualizeError::Io {
        path: req.save_path.clone(),
        source,
    })?;
    Ok(req.save_path.clone())
}

/// Ground truth, one path per model and the shaded missing runs over the
/// first `x_range` timesteps (clamped to the window).
pub fn render_svg(
    bundle: &Bundle,
    sample_index: usize,
    x_range: usize,
) -> Result<String, VisualizeError> {
    let sample = bundle.samples.get(sample_index).ok_or_else(|| {
        VisualizeError::InvalidValue(format!(
            "sample_index {sample_index} out of range (bundle has {} samples)",
            bundle.samples.len()
        ))
    })?;
    if x_range == 0 {
        return Err(VisualizeError::InvalidValue(
            "x_range must be at least 1".into(),
        ));
    }
    let n = x_range.min(sample.truth.len());
    if n == 0 {
        return Err(VisualizeError::InvalidValue(
            "sample has no timesteps".into(),
        ));
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut extend = |v: f64| {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    };
    sample.truth[..n].iter().copied().for_each(&mut extend);
    for segs in sample.imputations.values() {
        for seg in segs {
            for (k, &v) in seg.values.iter().enumerate() {
                if seg.start + k < n {
                    extend(v);
                }
            }
        }
    }
    if !lo.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }

    let plot_w = WIDTH - PAD_LEFT - PAD_RIGHT;
    let plot_h = HEIGHT - 2.0 * PAD_Y;
    let denom = (n.max(2) - 1) as f64;
    let x = |t: usize| PAD_LEFT + plot_w * t as f64 / denom;
    let y = |v: f64| PAD_Y + plot_h * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        "<title>{} / {} / {} {}</title>",
        escape(&bundle.experiment),
        escape(&sample.id),
        escape(&bundle.missingness.kind),
        bundle.missingness.percent
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    for &[start, len] in &sample.missing_runs {
        if start >= n {
            continue;
        }
        let end = (start + len).min(n);
        let x0 = x(start);
        let x1 = x(end.saturating_sub(1)).max(x0 + 1.0);
        let _ = writeln!(
            s,
            r##"<rect class="missing" x="{x0:.2}" y="{PAD_Y}" width="{:.2}" height="{plot_h}" fill="#cccccc" fill-opacity="0.5"/>"##,
            x1 - x0
        );
    }

    let mut truth_d = String::new();
    append_polyline(&mut truth_d, (0..n).map(|t| (x(t), y(sample.truth[t]))));
    let _ = writeln!(
        s,
        r#"<path class="series" data-series="ground_truth" d="{truth_d}" fill="none" stroke="black" stroke-width="1.2"/>"#
    );

    let mut legend = vec![("ground truth".to_string(), "black")];
    for (i, model) in bundle.models.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        if let Some(segs) = sample.imputations.get(model) {
            for seg in segs {
                let end = (seg.start + seg.values.len()).min(n);
                if seg.start >= end {
                    continue;
                }
                append_polyline(
                    &mut d,
                    (seg.start..end).map(|t| (x(t), y(seg.values[t - seg.start]))),
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<path class="series" data-series="{}" d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            escape(model)
        );
        let label = match sample.metrics.get(model) {
            Some(m) => format!("{model} (mse {:.4})", m.mse),
            None => model.clone(),
        };
        legend.push((label, color));
    }

    let lx = WIDTH - PAD_RIGHT + 10.0;
    for (i, (label, color)) in legend.iter().enumerate() {
        let ly = PAD_Y + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11" font-family="sans-serif">{}</text></g>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn append_polyline(d: &mut String, points: impl Iterator<Item = (f64, f64)>) {
    for (k, (px, py)) in points.enumerate() {
        if !py.is_finite() {
            continue;
        }
        let cmd = if k == 0 { 'M' } else { 'L' };
        if !d.is_empty() && k == 0 {
            d.push(' ');
        }
        let _ = write!(d, "{cmd}{px:.2},{py:.2}");
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::bundle::{BundleSample, Metrics, Segment};
    use std::collections::BTreeMap;

    fn bundle(models: &[&str]) -> Bundle {
        let truth: Vec<f64> = (0..500).map(|t| (t as f64 * 0.05).sin()).collect();
        let imputations = models
            .iter()
            .map(|m| {
                (
                    m.to_string(),
                    vec![Segment {
                        start: 100,
                        values: vec![0.0; 250],
                    }],
                )
            })
            .collect();
        let metrics = models
            .iter()
            .map(|m| (m.to_string(), Metrics { mse: 0.5, mae: 0.6 }))
            .collect::<BTreeMap<_, _>>();
        Bundle {
            version: 1,
            experiment: "e".into(),
            missingness: MissingnessInfo {
                kind: "extended".into(),
                percent: 0.1,
            },
            sampling_rate_hz: 100.0,
            models: models.iter().map(|m| m.to_string()).collect(),
            samples: vec![BundleSample {
                id: "s0".into(),
                channel: None,
                truth,
                missing_runs: vec![[200, 50]],
                imputations,
                metrics,
            }],
        }
    }

    #[test]
    fn one_series_per_model_plus_truth() {
        let svg = render_svg(&bundle(&["a", "b", "c"]), 0, 5000).unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 4);
        assert_eq!(svg.matches(r#"class="missing""#).count(), 1);
        assert_eq!(svg.matches(r#"class="legend""#).count(), 4);
    }

    #[test]
    fn short_range_hides_later_runs() {
        let svg = render_svg(&bundle(&["a"]), 0, 150).unwrap();
        assert_eq!(svg.matches(r#"class="missing""#).count(), 0);
    }

    #[test]
    fn bad_index_and_range() {
        assert!(matches!(
            render_svg(&bundle(&["a"]), 3, 100),
            Err(VisualizeError::InvalidValue(_))
        ));
        assert!(matches!(
            render_svg(&bundle(&["a"]), 0, 0),
            Err(VisualizeError::InvalidValue(_))
        ));
    }

    #[test]
    fn missing_model_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_comparison(dir.path(), "e", None, &["fft".to_string()]).unwrap_err();
        match err {
            VisualizeError::MissingResults { model, .. } => assert_eq!(model, "fft"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
