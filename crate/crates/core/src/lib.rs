//! Classical imputation workbench for quasi-periodic biosignals.
//!
//! The crate is organized along the experiment pipeline:
//!
//! * [`config`] parses and validates experiment documents,
//! * [`dataset`] loads, generates and preprocesses waveform windows,
//! * [`missingness`] simulates missing regions while keeping ground truth,
//! * [`imputers`] holds the imputer interface and the classical methods,
//! * [`evaluation`] scores imputations on the missing region only,
//! * [`runner`] ties everything together and writes reports, viewer
//!   bundles and static plots.

pub mod config;
pub mod dataset;
pub mod evaluation;
pub mod imputers;
pub mod missingness;
pub mod rng;
pub mod runner;
pub mod signal;

pub use config::{
    parse_config, validate, CliOverrides, ConfigError, DataConfig, ExperimentConfig, ModelConfig,
    ParamValue, TrainConfig, Violation,
};
pub use dataset::{load_dataset, DatasetError, SyntheticParams};
pub use evaluation::{EvalError, EvaluationReport, ImputationResult};
pub use imputers::{FittedState, ImputeError, Imputer, ImputerRegistry};
pub use missingness::{MaskedSample, MechanismRegistry, MissingnessError, MissingnessSpec};
pub use runner::{run_experiment, RunError, RunOutcome};
pub use signal::{Mask, Sample, SignalSet, SplitTag};
