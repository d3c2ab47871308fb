//! End-to-end experiment runs.
//!
//! A run validates the config, loads and normalizes the data, splits it,
//! masks the evaluation split, optionally fits, imputes, scores and writes
//! `report.json`, `bundle.json` and (for stateful imputers)
//! `fitted_state.bin` under `<results_root>/<experiment>/<model>/`.

pub mod bundle;
pub mod plot;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::Normalization;
use crate::config::{parse_config, validate_with, ExperimentConfig, Violation};
use crate::dataset::{load_dataset, normalize_zscore, split};
use crate::evaluation::{score_sample, EvalError, EvaluationReport, SampleFailure};
use crate::imputers::{impute_batch_partial, FittedState, ImputerRegistry};
use crate::missingness::{mask_set, MaskedSample, MechanismRegistry};

pub use bundle::{export_bundle, Bundle, BundleError, BundleMeta, MissingnessInfo};
pub use plot::{
    load_comparison, render_svg, visualize_standalone, VisualizeError, VisualizeRequest,
};

pub const REPORT_FILE: &str = "report.json";
pub const BUNDLE_FILE: &str = "bundle.json";
pub const FITTED_STATE_FILE: &str = "fitted_state.bin";
pub const FAILED_DIR: &str = "failed";
const LOCK_FILE: &str = ".lock";

/// Config used by `run -d <name>` when no `-c` is given.
pub const DEFAULT_CONFIG: &str = "\
experiment_name: default
data:
  dataset_name: synthetic_ppg
  window_length: 1000
  sampling_rate_hz: 100
  missingness:
    type: extended
    percent: 0.1
model:
  name: fft
  params:
    top_k: 5
train:
  enabled: false
";

pub fn default_config() -> ExperimentConfig {
    parse_config(DEFAULT_CONFIG).expect("embedded default config is valid")
}

/// Resolves a `-c` argument: an existing path is used as is, otherwise it
/// is looked up under `configs_root` (with `.yaml` appended if needed).
pub fn resolve_config_path(arg: &Path, configs_root: &Path) -> Option<PathBuf> {
    if arg.is_file() {
        return Some(arg.to_path_buf());
    }
    let candidate = configs_root.join(arg);
    if candidate.is_file() {
        return Some(candidate);
    }
    let with_ext = configs_root.join(arg).with_extension("yaml");
    with_ext.is_file().then_some(with_ext)
}

/// Pipeline stage a [`RunError`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Normalize,
    Missingness,
    Fit,
    Impute,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Normalize => "normalize",
            Stage::Missingness => "missingness",
            Stage::Fit => "fit",
            Stage::Impute => "impute",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config is invalid:{}", list(.0))]
    Invalid(Vec<Violation>),
    #[error("[{stage}] {message}")]
    Stage { stage: Stage, message: String },
    #[error(
        "output directory {0} is locked by another run (remove the .lock file if it is stale)"
    )]
    Locked(PathBuf),
}

fn list(vs: &[Violation]) -> String {
    vs.iter().map(|v| format!("\n  - {v}")).collect()
}

impl RunError {
    fn at(stage: Stage, e: impl fmt::Display) -> Self {
        RunError::Stage {
            stage,
            message: e.to_string(),
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            RunError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub results_root: PathBuf,
    pub imputers: ImputerRegistry,
    pub mechanisms: MechanismRegistry,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            results_root: PathBuf::from("results"),
            imputers: ImputerRegistry::with_builtins(),
            mechanisms: MechanismRegistry::with_builtins(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvaluationReport,
    pub output_dir: PathBuf,
    pub report_path: PathBuf,
    pub bundle_path: PathBuf,
    pub fitted_state_path: Option<PathBuf>,
    /// 0 when every sample was imputed and scored, 1 otherwise.
    pub exit_code: i32,
}

/// Runs with the built-in registries, writing under `./results`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    run_experiment_with(config, &RunOptions::default())
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let violations = validate_with(config, &opts.imputers, &opts.mechanisms);
    if !violations.is_empty() {
        return Err(RunError::Invalid(violations));
    }

    let out_dir = opts
        .results_root
        .join(&config.experiment_name)
        .join(&config.model.name);
    fs::create_dir_all(&out_dir)
        .map_err(|e| RunError::at(Stage::Write, format!("{}: {e}", out_dir.display())))?;
    let _lock = LockGuard::acquire(&out_dir)?;

    match pipeline(config, opts, &out_dir) {
        Ok(outcome) => Ok(outcome),
        Err(e) => {
            write_failure(&out_dir, &e);
            Err(e)
        }
    }
}

fn pipeline(
    config: &ExperimentConfig,
    opts: &RunOptions,
    out_dir: &Path,
) -> Result<RunOutcome, RunError> {
    let raw = load_dataset(&config.data).map_err(|e| RunError::at(Stage::Load, e))?;
    let set = match config.data.normalization {
        Normalization::None => raw,
        Normalization::Zscore => {
            normalize_zscore(&raw)
                .map_err(|e| RunError::at(Stage::Normalize, e))?
                .0
        }
    };
    let (train, _val, test) = split(&set, config.data.split, config.data.seed);
    let eval_set = if test.is_empty() { set.clone() } else { test };

    let mechanism = opts
        .mechanisms
        .dispatch(&config.data.missingness)
        .map_err(|e| RunError::at(Stage::Missingness, e))?;
    let mut failures = Vec::new();
    let mut masked: Vec<MaskedSample> = Vec::with_capacity(eval_set.len());
    for (sample, r) in eval_set.samples.iter().zip(mask_set(
        &eval_set,
        mechanism.as_ref(),
        config.missingness_seed(),
    )) {
        match r {
            Ok(m) => masked.push(m),
            Err(e) => failures.push(SampleFailure {
                sample_id: sample.id.clone(),
                error: format!("missingness: {e}"),
            }),
        }
    }
    if masked.is_empty() {
        return Err(RunError::at(
            Stage::Missingness,
            format!("no sample could be masked ({} failures)", failures.len()),
        ));
    }

    let imputer = opts
        .imputers
        .build(&config.model.name, &config.model.params)
        .map_err(|e| RunError::at(Stage::Fit, e))?;
    let state = if config.train.enabled {
        imputer
            .fit(&train)
            .map_err(|e| RunError::at(Stage::Fit, e))?
    } else {
        FittedState::empty()
    };

    let mut results = Vec::with_capacity(masked.len());
    let mut scored_truth = Vec::with_capacity(masked.len());
    let mut scores = Vec::with_capacity(masked.len());
    for (m, r) in masked.iter().zip(impute_batch_partial(
        imputer.as_ref(),
        &state,
        &masked,
        config.train.batch_size,
    )) {
        let result = match r {
            Ok(r) => r,
            Err(e) => {
                failures.push(SampleFailure {
                    sample_id: e.sample_id.clone(),
                    error: format!("impute: {}", e.source),
                });
                continue;
            }
        };
        match score_sample(m.id(), &m.ground_truth, &result.imputed, &m.scored_mask()) {
            Ok(s) => scores.push(s),
            // Nothing simulated outside source gaps: nothing to score.
            Err(EvalError::EmptyMask) => {}
            Err(e) => {
                failures.push(SampleFailure {
                    sample_id: m.id().to_string(),
                    error: format!("evaluate: {e}"),
                });
                continue;
            }
        }
        scored_truth.push(m.clone());
        results.push(result);
    }
    if results.is_empty() {
        return Err(RunError::at(
            Stage::Impute,
            format!(
                "every sample failed; first error: {}",
                failures.first().map(|f| f.error.as_str()).unwrap_or("none")
            ),
        ));
    }

    let mut report = EvaluationReport::new(
        &config.experiment_name,
        &config.model.name,
        scores.clone(),
        config.digest(),
        config.missingness_seed(),
    )
    .map_err(|e| RunError::at(Stage::Evaluate, e))?;
    report.failures = failures;

    let meta = BundleMeta {
        experiment: config.experiment_name.clone(),
        missingness: MissingnessInfo {
            kind: config.data.missingness.kind.clone(),
            percent: config.data.missingness.percent,
        },
        sampling_rate_hz: config.data.sampling_rate_hz,
        channel_names: set.channel_names.clone(),
    };
    let mut by_model = BTreeMap::new();
    by_model.insert(config.model.name.clone(), results);
    let mut score_map = BTreeMap::new();
    score_map.insert(config.model.name.clone(), scores);
    let bundle = export_bundle(&meta, &scored_truth, &by_model, &score_map)
        .map_err(|e| RunError::at(Stage::Write, e))?;

    let write = |name: &str, bytes: &[u8]| -> Result<PathBuf, RunError> {
        let path = out_dir.join(name);
        write_atomic(&path, bytes)
            .map_err(|e| RunError::at(Stage::Write, format!("{}: {e}", path.display())))?;
        Ok(path)
    };
    let fitted_state_path = if state.is_empty() {
        let stale = out_dir.join(FITTED_STATE_FILE);
        if stale.exists() {
            let _ = fs::remove_file(stale);
        }
        None
    } else {
        Some(write(FITTED_STATE_FILE, &state.to_bytes())?)
    };
    let bundle_path = write(BUNDLE_FILE, bundle.to_json().as_bytes())?;
    let report_path = write(REPORT_FILE, report.to_json().as_bytes())?;

    let exit_code = if report.failures.is_empty() { 0 } else { 1 };
    Ok(RunOutcome {
        report,
        output_dir: out_dir.to_path_buf(),
        report_path,
        bundle_path,
        fitted_state_path,
        exit_code,
    })
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn write_failure(out_dir: &Path, err: &RunError) {
    let stage = err
        .stage()
        .map(|s| s.to_string())
        .unwrap_or_else(|| "run".into());
    let doc = serde_json::json!({ "stage": stage, "error": err.to_string() });
    let path = out_dir.join(FAILED_DIR).join("diagnostic.json");
    let mut text = serde_json::to_string_pretty(&doc).expect("diagnostic serializes");
    text.push('\n');
    let _ = write_atomic(&path, text.as_bytes());
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(dir: &Path) -> Result<Self, RunError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(RunError::Locked(dir.to_path_buf()))
            }
            Err(e) => Err(RunError::at(
                Stage::Write,
                format!("{}: {e}", path.display()),
            )),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}
