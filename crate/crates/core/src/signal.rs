//! Waveform containers shared across the pipeline.

use serde::{Deserialize, Serialize};

/// Which partition of a dataset a [`SignalSet`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
    All,
}

/// Boolean missingness indicator, `true` = missing, one row per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: Vec<Vec<bool>>,
}

impl Mask {
    /// All-observed mask.
    pub fn new(channels: usize, len: usize) -> Self {
        Self {
            rows: vec![vec![false; len]; channels],
        }
    }

    /// Builds a mask from explicit rows. Rows must share one length.
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        if let Some(first) = rows.first() {
            let len = first.len();
            assert!(
                rows.iter().all(|r| r.len() == len),
                "mask rows must share one length"
            );
        }
        Self { rows }
    }

    /// Same row repeated for every channel.
    pub fn broadcast(row: Vec<bool>, channels: usize) -> Self {
        Self {
            rows: vec![row; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, channel: usize) -> &[bool] {
        &self.rows[channel]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn get(&self, channel: usize, t: usize) -> bool {
        self.rows[channel][t]
    }

    pub fn set(&mut self, channel: usize, t: usize, missing: bool) {
        self.rows[channel][t] = missing;
    }

    /// Total number of missing entries over all channels.
    pub fn count_missing(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.iter().filter(|&&m| m).count())
            .sum()
    }

    pub fn none_missing(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&m| !m))
    }

    /// Maximal missing runs of one channel as `(start, len)` pairs.
    pub fn runs(&self, channel: usize) -> Vec<(usize, usize)> {
        runs_of(&self.rows[channel])
    }

    /// Elementwise OR.
    pub fn union(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    /// Entries missing here but not in `other`.
    pub fn minus(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn same_shape(&self, channels: usize, len: usize) -> bool {
        self.channels() == channels && self.len() == len
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert!(
            self.same_shape(other.channels(), other.len()),
            "mask shapes differ"
        );
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Mask { rows }
    }
}

/// Maximal `true` runs of a boolean row as `(start, len)` pairs.
pub fn runs_of(row: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (t, &m) in row.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                runs.push((s, t - s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, row.len() - s));
    }
    runs
}

/// One fixed-length multi-channel window.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    /// `channels × window_length`, one inner vector per channel.
    pub values: Vec<Vec<f64>>,
    /// Positions that were already missing in the source file (empty CSV
    /// cells, `nan`). Their stored value is a placeholder and never a NaN.
    pub source_missing: Option<Mask>,
}

impl Sample {
    pub fn new(id: impl Into<String>, values: Vec<Vec<f64>>) -> Self {
        Self {
            id: id.into(),
            values,
            source_missing: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn window_length(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Ordered collection of equally shaped windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    pub samples: Vec<Sample>,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub split_tag: SplitTag,
}

impl SignalSet {
    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    /// Window length of the first sample, 0 for an empty set.
    pub fn window_length(&self) -> usize {
        self.samples.first().map_or(0, Sample::window_length)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Copy of the metadata with a different sample list.
    pub fn with_samples(&self, samples: Vec<Sample>, split_tag: SplitTag) -> SignalSet {
        SignalSet {
            samples,
            sampling_rate_hz: self.sampling_rate_hz,
            channel_names: self.channel_names.clone(),
            split_tag,
        }
    }
}

/// Default channel labels `ch0`, `ch1`, ...
pub fn default_channel_names(channels: usize) -> Vec<String> {
    (0..channels).map(|c| format!("ch{c}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_cover_edges() {
        let row = [true, true, false, true, false, false, true];
        assert_eq!(runs_of(&row), vec![(0, 2), (3, 1), (6, 1)]);
        assert!(runs_of(&[false; 4]).is_empty());
        assert_eq!(runs_of(&[true; 3]), vec![(0, 3)]);
    }

    #[test]
    fn union_and_minus() {
        let a = Mask::from_rows(vec![vec![true, false, true]]);
        let b = Mask::from_rows(vec![vec![false, false, true]]);
        assert_eq!(a.union(&b).row(0), &[true, false, true]);
        assert_eq!(a.minus(&b).row(0), &[true, false, false]);
        assert_eq!(a.count_missing(), 2);
    }
}
