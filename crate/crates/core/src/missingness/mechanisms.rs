use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Mechanism, MissingnessError, PLACEMENT_ATTEMPTS};
use crate::signal::Mask;

/// Missing count `round(percent · len)`.
fn target_count(percent: f64, len: usize) -> usize {
    (percent * len as f64).round() as usize
}

fn check_open_unit(percent: f64) -> Result<(), MissingnessError> {
    if percent > 0.0 && percent < 1.0 {
        Ok(())
    } else {
        Err(MissingnessError::InvalidValue(format!(
            "percent must lie in (0,1), got {percent}"
        )))
    }
}

/// One row shared by all channels, or one independent row per channel.
fn build_mask(
    channels: usize,
    per_channel: bool,
    rng: &mut ChaCha8Rng,
    mut row: impl FnMut(&mut ChaCha8Rng) -> Result<Vec<bool>, MissingnessError>,
) -> Result<Mask, MissingnessError> {
    if per_channel {
        let rows = (0..channels).map(|_| row(rng)).collect::<Result<_, _>>()?;
        Ok(Mask::from_rows(rows))
    } else {
        Ok(Mask::broadcast(row(rng)?, channels))
    }
}

/// One contiguous block of `round(percent · len)` timesteps with a uniform
/// start in `[0, len − L]`.
pub fn extended_row(
    len: usize,
    percent: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<bool>, MissingnessError> {
    check_open_unit(percent)?;
    let block = target_count(percent, len);
    if block == 0 || block > len {
        return Err(MissingnessError::InvalidValue(format!(
            "percent {percent} gives a block of {block} in a window of {len}"
        )));
    }
    let start = rng.random_range(0..=len - block);
    let mut row = vec![false; len];
    row[start..start + block].fill(true);
    Ok(row)
}

/// `round(percent · len)` missing timesteps split into gaps of uniform length
/// in `[1, max_gap]` (the last one truncated to hit the total exactly).
///
/// Gaps never touch: at least one observed timestep separates neighbours, so
/// every maximal run is one drawn gap. Given the drawn lengths, the
/// arrangement is uniform over all non-touching placements (stars and bars
/// over the spare observed timesteps). Lengths are redrawn when they cannot
/// fit, up to [`PLACEMENT_ATTEMPTS`] times.
pub fn transient_row(
    len: usize,
    percent: f64,
    max_gap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<bool>, MissingnessError> {
    check_open_unit(percent)?;
    if max_gap == 0 {
        return Err(MissingnessError::InvalidValue(
            "max_gap must be >= 1".into(),
        ));
    }
    let total = target_count(percent, len);
    if total == 0 || total > len {
        return Err(MissingnessError::InvalidValue(format!(
            "percent {percent} gives {total} missing in a window of {len}"
        )));
    }
    let free = len - total;

    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut lengths = Vec::new();
        let mut sum = 0;
        while sum < total {
            let l = rng.random_range(1..=max_gap).min(total - sum);
            lengths.push(l);
            sum += l;
        }
        lengths.shuffle(rng);

        let gaps = lengths.len();
        if gaps - 1 > free {
            continue;
        }
        // `slack` observed timesteps beyond the mandatory separators are
        // spread over the gaps + 1 slots around the gaps.
        let slack = free - (gaps - 1);
        let mut slots = sample_indices(rng, slack + gaps, gaps).into_vec();
        slots.sort_unstable();

        let mut row = vec![false; len];
        let mut placed = 0;
        for (i, (&slot, &l)) in slots.iter().zip(&lengths).enumerate() {
            let start = (slot - i) + placed + i;
            row[start..start + l].fill(true);
            placed += l;
        }
        return Ok(row);
    }
    Err(MissingnessError::PlacementFailure {
        missing: total,
        max_gap,
        len,
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// Independent Bernoulli(`percent`) per timestep.
pub fn mcar_row(
    len: usize,
    percent: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<bool>, MissingnessError> {
    if !(0.0..1.0).contains(&percent) {
        return Err(MissingnessError::InvalidValue(format!(
            "percent must lie in [0,1), got {percent}"
        )));
    }
    Ok((0..len).map(|_| rng.random_bool(percent)).collect())
}

#[derive(Debug, Clone)]
pub struct Extended {
    pub percent: f64,
    pub per_channel: bool,
}

impl Mechanism for Extended {
    fn name(&self) -> &str {
        super::EXTENDED
    }

    fn generate(
        &self,
        channels: usize,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mask, MissingnessError> {
        build_mask(channels, self.per_channel, rng, |r| {
            extended_row(len, self.percent, r)
        })
    }
}

#[derive(Debug, Clone)]
pub struct Transient {
    pub percent: f64,
    pub max_gap: usize,
    pub per_channel: bool,
}

impl Mechanism for Transient {
    fn name(&self) -> &str {
        super::TRANSIENT
    }

    fn generate(
        &self,
        channels: usize,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mask, MissingnessError> {
        build_mask(channels, self.per_channel, rng, |r| {
            transient_row(len, self.percent, self.max_gap, r)
        })
    }
}

#[derive(Debug, Clone)]
pub struct McarPoints {
    pub percent: f64,
    pub per_channel: bool,
}

impl Mechanism for McarPoints {
    fn name(&self) -> &str {
        super::MCAR_POINTS
    }

    fn generate(
        &self,
        channels: usize,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mask, MissingnessError> {
        build_mask(channels, self.per_channel, rng, |r| {
            mcar_row(len, self.percent, r)
        })
    }
}

/// Masks cropped from recorded missingness patterns.
#[derive(Debug, Clone)]
pub struct PatternFile {
    pub rows: Vec<Vec<bool>>,
    pub per_channel: bool,
}

impl PatternFile {
    fn crop(&self, row: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let source = &self.rows[row];
        let offset = rng.random_range(0..=source.len() - len);
        source[offset..offset + len].to_vec()
    }
}

impl Mechanism for PatternFile {
    fn name(&self) -> &str {
        super::PATTERN_FILE
    }

    fn generate(
        &self,
        channels: usize,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mask, MissingnessError> {
        if self.rows.is_empty() {
            return Err(MissingnessError::Format("pattern file has no rows".into()));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() < len) {
            return Err(MissingnessError::Format(format!(
                "pattern row {} has length {}, shorter than window {len}",
                i + 1,
                r.len()
            )));
        }
        if self.per_channel && self.rows.len() >= channels {
            let picks = sample_indices(rng, self.rows.len(), channels).into_vec();
            let rows = picks.into_iter().map(|r| self.crop(r, len, rng)).collect();
            Ok(Mask::from_rows(rows))
        } else {
            let r = rng.random_range(0..self.rows.len());
            Ok(Mask::broadcast(self.crop(r, len, rng), channels))
        }
    }
}

/// Reads a CSV of 0/1 integers, one mask per row.
pub fn load_pattern_file(path: &Path) -> Result<Vec<Vec<bool>>, MissingnessError> {
    let io = |e: std::io::Error| MissingnessError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let text = std::fs::read_to_string(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| MissingnessError::Format(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(MissingnessError::Format(format!(
                    "{}: row {}, column {}: expected 0 or 1, got `{other}`",
                    path.display(),
                    i + 1,
                    j + 1
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MissingnessError::Format(format!(
            "{}: no mask rows",
            path.display()
        )));
    }
    Ok(rows)
}
