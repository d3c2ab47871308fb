//! Waveform datasets: on-disk formats, the synthetic pulse generator and
//! preprocessing (z-score, windowing, seeded splits).
//!
//! Custom datasets are directories under a data root, looked up by name. The
//! format is recognized from the files inside:
//!
//! * `*.csv`: one column per channel, optional header row, empty cells or
//!   `nan` mark samples missing at the source;
//! * `*.f32` / `*.bin` plus `meta.json`: little-endian `f32`, records of
//!   `channels × record_length` values stored channel-major;
//! * `*.jsonl`: one `{"id": ..., "values": [[...], ...]}` record per line.

mod formats;
mod preprocess;
mod synthetic;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{DataConfig, DataFormat, Normalization};
use crate::signal::{SignalSet, SplitTag};

pub use formats::{
    probe_dataset_dir, read_csv, read_jsonl, read_raw_f32, write_raw_f32, DatasetProbe, RawMeta,
    Recording,
};
pub use preprocess::{normalize_zscore, split, window, window_recording, ChannelStats};
pub use synthetic::{generate_synthetic, SyntheticParams, SyntheticProfile};

/// Environment variable naming the root directory of custom datasets.
pub const DATA_DIR_ENV: &str = "PULSEKIT_DATA_DIR";

/// Dataset names served by the synthetic generator.
pub const BUILTIN_SYNTHETIC: &[&str] = &["synthetic_ppg", "synthetic_ecg"];

pub fn is_builtin_synthetic(name: &str) -> bool {
    BUILTIN_SYNTHETIC.contains(&name)
}

/// Data root from `PULSEKIT_DATA_DIR`, defaulting to `./data`.
pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("channel {0} is constant, cannot z-score")]
    DegenerateChannel(usize),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Loads (or generates) the configured dataset and cuts it into windows.
///
/// Normalization is not applied here; see [`prepare_dataset`].
pub fn load_dataset(data: &DataConfig) -> Result<SignalSet, DatasetError> {
    let set = match data.format {
        DataFormat::Synthetic => {
            return generate_synthetic(&SyntheticParams::from_config(data));
        }
        format => {
            let path = data.path.as_deref().ok_or_else(|| {
                DatasetError::InvalidValue(format!("format {} needs a path", format.name()))
            })?;
            let recordings = match format {
                DataFormat::Csv => read_csv(path, data.channels)?,
                DataFormat::RawF32 => read_raw_f32(path, data.channels, data.sampling_rate_hz)?,
                DataFormat::Jsonl => read_jsonl(path, data.channels)?,
                DataFormat::Synthetic => unreachable!(),
            };
            let mut samples = Vec::new();
            for rec in &recordings {
                if rec.len() >= data.window_length {
                    samples.extend(window_recording(rec, data.window_length)?);
                }
            }
            SignalSet {
                samples,
                sampling_rate_hz: data.sampling_rate_hz,
                channel_names: recordings
                    .first()
                    .and_then(|r| r.channel_names.clone())
                    .unwrap_or_else(|| crate::signal::default_channel_names(data.channels)),
                split_tag: SplitTag::All,
            }
        }
    };
    if set.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    Ok(set)
}

/// [`load_dataset`] followed by the configured normalization.
pub fn prepare_dataset(
    data: &DataConfig,
) -> Result<(SignalSet, Option<Vec<ChannelStats>>), DatasetError> {
    let set = load_dataset(data)?;
    match data.normalization {
        Normalization::None => Ok((set, None)),
        Normalization::Zscore => {
            let (set, stats) = normalize_zscore(&set)?;
            Ok((set, Some(stats)))
        }
    }
}
