use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::config::DataFormat;
use crate::signal::{Mask, SignalSet};

/// One continuous multi-channel recording before windowing.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub channels: Vec<Vec<f64>>,
    /// Source-level missing markers; `None` when the recording is complete.
    pub missing: Option<Mask>,
    pub channel_names: Option<Vec<String>>,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `meta.json` sidecar of a raw-f32 dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMeta {
    pub channels: usize,
    pub sampling_rate_hz: f64,
    pub record_length: usize,
    pub dtype: String,
}

pub const RAW_DTYPE: &str = "f32le";

/// What [`probe_dataset_dir`] found in a custom dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetProbe {
    pub format: DataFormat,
    pub channels: usize,
    pub sampling_rate_hz: Option<f64>,
}

fn list_files(path: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, DatasetError> {
    let meta = fs::metadata(path).map_err(|e| DatasetError::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| DatasetError::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.contains(&e))
        })
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn is_missing_marker(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("nan")
}

/// Turns per-channel optional values into values plus an optional mask.
/// Missing entries are stored as 0.
fn settle(rows: Vec<Vec<Option<f64>>>) -> (Vec<Vec<f64>>, Option<Mask>) {
    let any_missing = rows.iter().flatten().any(Option::is_none);
    let mask = any_missing.then(|| {
        Mask::from_rows(
            rows.iter()
                .map(|r| r.iter().map(Option::is_none).collect())
                .collect(),
        )
    });
    let values = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.unwrap_or(0.0)).collect())
        .collect();
    (values, mask)
}

/// Reads one CSV file or every `*.csv` in a directory (lexicographic order).
pub fn read_csv(path: &Path, channels: usize) -> Result<Vec<Recording>, DatasetError> {
    let files = list_files(path, &["csv"])?;
    files.iter().map(|f| read_csv_file(f, channels)).collect()
}

fn read_csv_file(path: &Path, channels: usize) -> Result<Recording, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); channels];
    let mut names = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != channels {
            return Err(DatasetError::Format(format!(
                "{}: row {} has {} columns, expected {channels}",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        let parsed: Vec<Option<Result<f64, _>>> = record
            .iter()
            .map(|cell| (!is_missing_marker(cell)).then(|| cell.parse::<f64>()))
            .collect();
        if line == 0 && parsed.iter().any(|c| matches!(c, Some(Err(_)))) {
            names = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        for (c, cell) in parsed.into_iter().enumerate() {
            let v = match cell {
                None => None,
                Some(Ok(v)) if v.is_finite() => Some(v),
                Some(Ok(_)) => None,
                Some(Err(_)) => {
                    return Err(DatasetError::Format(format!(
                        "{}: non-numeric cell at row {}, column {}",
                        path.display(),
                        line + 1,
                        c + 1
                    )))
                }
            };
            columns[c].push(v);
        }
    }
    let (channels, missing) = settle(columns);
    Ok(Recording {
        id: stem(path),
        channels,
        missing,
        channel_names: names,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> DatasetError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => DatasetError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        DatasetError::Format(format!("{}: {e}", path.display()))
    }
}

fn meta_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("meta.json")
    } else {
        path.with_file_name("meta.json")
    }
}

pub fn read_meta(path: &Path) -> Result<RawMeta, DatasetError> {
    let mp = meta_path(path);
    let text = fs::read_to_string(&mp).map_err(|e| DatasetError::io(&mp, e))?;
    let meta: RawMeta = serde_json::from_str(&text)
        .map_err(|e| DatasetError::Format(format!("{}: {e}", mp.display())))?;
    if meta.dtype != RAW_DTYPE {
        return Err(DatasetError::Format(format!(
            "{}: dtype must be \"{RAW_DTYPE}\", got \"{}\"",
            mp.display(),
            meta.dtype
        )));
    }
    if meta.channels == 0 || meta.record_length == 0 {
        return Err(DatasetError::Format(format!(
            "{}: channels and record_length must be positive",
            mp.display()
        )));
    }
    Ok(meta)
}

/// Reads raw little-endian `f32` records described by `meta.json`.
pub fn read_raw_f32(
    path: &Path,
    channels: usize,
    sampling_rate_hz: f64,
) -> Result<Vec<Recording>, DatasetError> {
    let meta = read_meta(path)?;
    if meta.channels != channels {
        return Err(DatasetError::Format(format!(
            "meta.json declares {} channels, config expects {channels}",
            meta.channels
        )));
    }
    if (meta.sampling_rate_hz - sampling_rate_hz).abs() > 1e-9 {
        return Err(DatasetError::Format(format!(
            "meta.json declares {} Hz, config expects {sampling_rate_hz} Hz",
            meta.sampling_rate_hz
        )));
    }
    let mut out = Vec::new();
    for file in list_files(path, &["f32", "bin"])? {
        let bytes = fs::read(&file).map_err(|e| DatasetError::io(&file, e))?;
        let frame = 4 * channels;
        if bytes.len() % frame != 0 {
            return Err(DatasetError::Format(format!(
                "{}: {} bytes is not a multiple of 4·channels = {frame}",
                file.display(),
                bytes.len()
            )));
        }
        let record_bytes = frame * meta.record_length;
        if bytes.len() % record_bytes != 0 {
            return Err(DatasetError::Format(format!(
                "{}: {} bytes is not a whole number of {}-sample records",
                file.display(),
                bytes.len(),
                meta.record_length
            )));
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        for (r, record) in values
            .chunks_exact(channels * meta.record_length)
            .enumerate()
        {
            let rows = record
                .chunks_exact(meta.record_length)
                .map(|ch| {
                    ch.iter()
                        .map(|&v| v.is_finite().then_some(v as f64))
                        .collect()
                })
                .collect();
            let (channels, missing) = settle(rows);
            out.push(Recording {
                id: format!("{}:{r}", stem(&file)),
                channels,
                missing,
                channel_names: None,
            });
        }
    }
    Ok(out)
}

/// Writes every sample of `set` as one raw-f32 record into `dir/<stem>.f32`
/// and a matching `meta.json`.
pub fn write_raw_f32(set: &SignalSet, dir: &Path, stem: &str) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    let meta = RawMeta {
        channels: set.channels(),
        sampling_rate_hz: set.sampling_rate_hz,
        record_length: set.window_length(),
        dtype: RAW_DTYPE.into(),
    };
    let mp = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&mp, text).map_err(|e| DatasetError::io(&mp, e))?;

    let mut bytes = Vec::with_capacity(set.len() * meta.channels * meta.record_length * 4);
    for sample in &set.samples {
        for channel in &sample.values {
            for &v in channel {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    let file = dir.join(format!("{stem}.f32"));
    fs::write(&file, bytes).map_err(|e| DatasetError::io(&file, e))
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    values: Vec<Vec<Option<f64>>>,
}

/// Reads JSON-lines records `{"id": str, "values": [[...], ...]}`; `null`
/// entries mark source-level missing samples.
pub fn read_jsonl(path: &Path, channels: usize) -> Result<Vec<Recording>, DatasetError> {
    let mut out = Vec::new();
    for file in list_files(path, &["jsonl"])? {
        let text = fs::read_to_string(&file).map_err(|e| DatasetError::io(&file, e))?;
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonRecord = serde_json::from_str(line).map_err(|e| {
                DatasetError::Format(format!("{}:{}: {e}", file.display(), line_no + 1))
            })?;
            if rec.values.len() != channels {
                return Err(DatasetError::Format(format!(
                    "{}:{}: record has {} channels, expected {channels}",
                    file.display(),
                    line_no + 1,
                    rec.values.len()
                )));
            }
            let len = rec.values[0].len();
            if rec.values.iter().any(|c| c.len() != len) {
                return Err(DatasetError::Format(format!(
                    "{}:{}: channels have different lengths",
                    file.display(),
                    line_no + 1
                )));
            }
            let (channels, missing) = settle(rec.values);
            out.push(Recording {
                id: rec.id,
                channels,
                missing,
                channel_names: None,
            });
        }
    }
    Ok(out)
}

/// Inspects a custom dataset directory: format from the data files present,
/// channel count from `meta.json` or the first file.
pub fn probe_dataset_dir(dir: &Path) -> Result<DatasetProbe, DatasetError> {
    if !dir.is_dir() {
        return Err(DatasetError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let meta = dir
        .join("meta.json")
        .is_file()
        .then(|| read_meta(dir))
        .transpose()?;
    let rate = meta.as_ref().map(|m| m.sampling_rate_hz);

    if !list_files(dir, &["f32", "bin"])?.is_empty() {
        let meta = meta.ok_or_else(|| {
            DatasetError::Format(format!("{}: raw-f32 data needs meta.json", dir.display()))
        })?;
        return Ok(DatasetProbe {
            format: DataFormat::RawF32,
            channels: meta.channels,
            sampling_rate_hz: rate,
        });
    }
    if let Some(first) = list_files(dir, &["csv"])?.first() {
        let channels = match &meta {
            Some(m) => m.channels,
            None => csv_width(first)?,
        };
        return Ok(DatasetProbe {
            format: DataFormat::Csv,
            channels,
            sampling_rate_hz: rate,
        });
    }
    if let Some(first) = list_files(dir, &["jsonl"])?.first() {
        let channels = match &meta {
            Some(m) => m.channels,
            None => jsonl_width(first)?,
        };
        return Ok(DatasetProbe {
            format: DataFormat::Jsonl,
            channels,
            sampling_rate_hz: rate,
        });
    }
    Err(DatasetError::EmptyDataset)
}

fn csv_width(path: &Path) -> Result<usize, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    match reader.records().next() {
        Some(r) => Ok(r.map_err(|e| csv_error(path, e))?.len()),
        None => Err(DatasetError::EmptyDataset),
    }
}

fn jsonl_width(path: &Path) -> Result<usize, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or(DatasetError::EmptyDataset)?;
    let rec: JsonRecord = serde_json::from_str(line)
        .map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?;
    Ok(rec.values.len())
}
