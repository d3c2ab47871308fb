use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use pulsekit_core::config::{load_config_file, merge_overrides, CliOverrides};
use pulsekit_core::dataset::data_root;
use pulsekit_core::runner::{
    default_config, load_comparison, resolve_config_path, run_experiment_with,
    visualize_standalone, MissingnessInfo, RunOptions, VisualizeRequest, BUNDLE_FILE,
};

#[derive(Debug, Parser)]
#[command(name = "pulsekit", version, about = "Biosignal imputation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment end to end.
    Run(RunArgs),
    /// Plot stored results of one or more models to an SVG file.
    Visualize(VisualizeArgs),
    /// Merge stored per-model bundles into one comparison bundle.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(true).args(["config", "dataset"])))]
struct RunArgs {
    /// Config file, either a path or relative to the configs directory.
    #[arg(short = 'c', long = "config")]
    config: Option<PathBuf>,
    /// Dataset name: a built-in synthetic set or a directory under the data root.
    #[arg(short = 'd', long = "dataset")]
    dataset: Option<String>,
    /// Enable or disable fitting (True/False).
    #[arg(long = "train", value_parser = parse_bool_token)]
    train: Option<bool>,
    #[arg(long, default_value = "results")]
    results_dir: PathBuf,
    #[arg(long, default_value = "configs")]
    configs_dir: PathBuf,
}

#[derive(Debug, Args)]
struct VisualizeArgs {
    /// Experiment name the results were stored under.
    #[arg(long)]
    task: String,
    /// Missingness type the stored runs must match.
    #[arg(long, requires = "missingness_percent")]
    missingness_type: Option<String>,
    /// Missingness fraction the stored runs must match.
    #[arg(long, requires = "missingness_type")]
    missingness_percent: Option<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<String>,
    #[arg(long, default_value_t = 0)]
    sample_index: usize,
    #[arg(long, default_value_t = 5000)]
    x_range: usize,
    #[arg(long)]
    save_path: PathBuf,
    #[arg(long, default_value = "results")]
    results_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<String>,
    /// Output path; defaults to <results-dir>/<experiment>/bundle.json.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    results_dir: PathBuf,
}

fn parse_bool_token(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected True or False, got `{s}`")),
    }
}

/// Accepts the single-dash `-train` spelling.
fn normalize_args(args: impl IntoIterator<Item = OsString>) -> Vec<OsString> {
    args.into_iter()
        .map(|a| match a.to_str() {
            Some("-train") => OsString::from("--train"),
            Some(s) if s.starts_with("-train=") => OsString::from(format!("-{s}")),
            _ => a,
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args_os())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run(a) => run(a),
        Command::Visualize(a) => visualize(a),
        Command::Export(a) => export(a),
    }
}

fn run(a: RunArgs) -> Result<u8> {
    let base = match &a.config {
        Some(p) => {
            let path = resolve_config_path(p, &a.configs_dir).ok_or_else(|| {
                anyhow!(
                    "config `{}` not found (also looked under {})",
                    p.display(),
                    a.configs_dir.display()
                )
            })?;
            load_config_file(&path).with_context(|| format!("loading {}", path.display()))?
        }
        None => default_config(),
    };
    let overrides = CliOverrides {
        config_path: a.config.clone(),
        dataset_name: a.dataset.clone(),
        train_flag: a.train,
    };
    let config = merge_overrides(&base, &overrides, &data_root())?;

    let opts = RunOptions {
        results_root: a.results_dir,
        ..RunOptions::default()
    };
    let outcome = run_experiment_with(&config, &opts)?;
    let r = &outcome.report;
    println!(
        "{} / {}: {} samples, mse {:.6}, mae {:.6}",
        r.experiment_name, r.model_name, r.n_samples, r.aggregate.mse, r.aggregate.mae
    );
    println!("report: {}", outcome.report_path.display());
    println!("bundle: {}", outcome.bundle_path.display());
    if let Some(p) = &outcome.fitted_state_path {
        println!("fitted state: {}", p.display());
    }
    for f in &r.failures {
        eprintln!("sample `{}` failed: {}", f.sample_id, f.error);
    }
    Ok(outcome.exit_code as u8)
}

fn missingness_filter(kind: Option<String>, percent: Option<f64>) -> Option<MissingnessInfo> {
    Some(MissingnessInfo {
        kind: kind?,
        percent: percent?,
    })
}

fn visualize(a: VisualizeArgs) -> Result<u8> {
    let req = VisualizeRequest {
        results_root: a.results_dir,
        experiment: a.task,
        missingness: missingness_filter(a.missingness_type, a.missingness_percent),
        models: a.models,
        sample_index: a.sample_index,
        x_range: a.x_range,
        save_path: a.save_path,
    };
    let path = visualize_standalone(&req)?;
    println!("plot: {}", path.display());
    Ok(0)
}

fn export(a: ExportArgs) -> Result<u8> {
    let bundle = load_comparison(&a.results_dir, &a.experiment, None, &a.models)?;
    let out = a
        .output
        .unwrap_or_else(|| a.results_dir.join(&a.experiment).join(BUNDLE_FILE));
    pulsekit_core::runner::write_atomic(&out, bundle.to_json().as_bytes())
        .with_context(|| format!("writing {}", out.display()))?;
    println!(
        "bundle: {} ({} models, {} samples)",
        out.display(),
        bundle.models.len(),
        bundle.samples.len()
    );
    Ok(0)
}
