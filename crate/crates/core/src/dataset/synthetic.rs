//! Quasi-periodic pulse-train generator.
//!
//! Each window is a sum of Gaussian bumps at jittered beat onsets, plus a
//! sinusoidal baseline wander and white Gaussian noise. All channels of a
//! window share the beat onsets (one heart) but get their own baseline phase
//! and noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::config::{DataConfig, Violation};
use crate::rng::{derive_seed, rng_from_seed};
use crate::signal::{default_channel_names, Sample, SignalSet, SplitTag};

/// Generator settings that do not depend on the data section's shape fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub n_samples: usize,
    pub pulse_rate_hz: f64,
    /// Relative beat-to-beat period jitter, uniform in `±rate_jitter`.
    pub rate_jitter: f64,
    /// Standard deviation of each Gaussian pulse, in seconds.
    pub pulse_width_s: f64,
    /// 0 disables the baseline wander.
    pub baseline_freq_hz: f64,
    pub baseline_amplitude: f64,
    pub noise_std: f64,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        Self {
            n_samples: 50,
            pulse_rate_hz: 1.2,
            rate_jitter: 0.05,
            pulse_width_s: 0.05,
            baseline_freq_hz: 0.1,
            baseline_amplitude: 1.0,
            noise_std: 0.05,
        }
    }
}

impl SyntheticProfile {
    /// Defaults for a built-in dataset name: `synthetic_ecg` has narrow
    /// spikes, everything else gets the broader PPG-like pulse.
    pub fn for_dataset(name: &str) -> Self {
        match name {
            "synthetic_ecg" => Self {
                pulse_width_s: 0.015,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }

    /// Range checks, reported against `data.synthetic.*`.
    pub fn check(&self, sampling_rate_hz: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let p = |k: &str| format!("data.synthetic.{k}");
        if self.n_samples < 1 {
            out.push(Violation::invalid(p("n_samples"), "must be >= 1"));
        }
        let rate_ok = self.pulse_rate_hz.is_finite() && self.pulse_rate_hz > 0.0;
        if !rate_ok {
            out.push(Violation::invalid(p("pulse_rate_hz"), "must be positive"));
        }
        if !(0.0..0.5).contains(&self.rate_jitter) {
            out.push(Violation::invalid(p("rate_jitter"), "must lie in [0,0.5)"));
        }
        if self.pulse_width_s.is_nan() || self.pulse_width_s <= 0.0 {
            out.push(Violation::invalid(p("pulse_width_s"), "must be positive"));
        } else if rate_ok
            && sampling_rate_hz > 0.0
            && !pulses_resolvable(self.pulse_rate_hz, self.pulse_width_s, sampling_rate_hz)
        {
            out.push(Violation::invalid(
                p("pulse_width_s"),
                "pulse period must be at least 4 pulse widths",
            ));
        }
        if self.baseline_freq_hz.is_nan() || self.baseline_freq_hz < 0.0 {
            out.push(Violation::invalid(p("baseline_freq_hz"), "must be >= 0"));
        }
        if !self.baseline_amplitude.is_finite() {
            out.push(Violation::invalid(
                p("baseline_amplitude"),
                "must be finite",
            ));
        }
        if self.noise_std.is_nan() || self.noise_std < 0.0 {
            out.push(Violation::invalid(p("noise_std"), "must be >= 0"));
        }
        out
    }
}

fn pulses_resolvable(rate_hz: f64, width_s: f64, fs: f64) -> bool {
    fs / rate_hz >= 4.0 * width_s * fs
}

/// Full generator input.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n_samples: usize,
    pub channels: usize,
    pub window_length: usize,
    pub sampling_rate_hz: f64,
    pub pulse_rate_hz: f64,
    pub rate_jitter: f64,
    pub pulse_width_s: f64,
    pub baseline_freq_hz: f64,
    pub baseline_amplitude: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn from_config(data: &DataConfig) -> Self {
        let p = &data.synthetic;
        Self {
            n_samples: p.n_samples,
            channels: data.channels,
            window_length: data.window_length,
            sampling_rate_hz: data.sampling_rate_hz,
            pulse_rate_hz: p.pulse_rate_hz,
            rate_jitter: p.rate_jitter,
            pulse_width_s: p.pulse_width_s,
            baseline_freq_hz: p.baseline_freq_hz,
            baseline_amplitude: p.baseline_amplitude,
            noise_std: p.noise_std,
            seed: data.seed,
        }
    }

    fn check(&self) -> Result<(), DatasetError> {
        if self.n_samples == 0 {
            return Err(DatasetError::EmptyDataset);
        }
        if self.channels == 0 || self.window_length == 0 {
            return Err(DatasetError::InvalidValue(
                "channels and window_length must be positive".into(),
            ));
        }
        if !(self.sampling_rate_hz > 0.0 && self.sampling_rate_hz.is_finite()) {
            return Err(DatasetError::InvalidValue(
                "sampling_rate_hz must be positive".into(),
            ));
        }
        let profile = SyntheticProfile {
            n_samples: self.n_samples,
            pulse_rate_hz: self.pulse_rate_hz,
            rate_jitter: self.rate_jitter,
            pulse_width_s: self.pulse_width_s,
            baseline_freq_hz: self.baseline_freq_hz,
            baseline_amplitude: self.baseline_amplitude,
            noise_std: self.noise_std,
        };
        match profile.check(self.sampling_rate_hz).first() {
            Some(v) => Err(DatasetError::InvalidValue(v.to_string())),
            None => Ok(()),
        }
    }
}

/// Generates `n_samples` independent windows. Window `i` draws from a
/// generator seeded with `derive_seed(seed, i)`, so output is a pure
/// function of the parameters.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<SignalSet, DatasetError> {
    params.check()?;
    let samples = (0..params.n_samples)
        .map(|i| synth_window(params, i))
        .collect();
    Ok(SignalSet {
        samples,
        sampling_rate_hz: params.sampling_rate_hz,
        channel_names: default_channel_names(params.channels),
        split_tag: SplitTag::All,
    })
}

fn synth_window(p: &SyntheticParams, index: usize) -> Sample {
    let mut rng = rng_from_seed(derive_seed(p.seed, index as u64));
    let fs = p.sampling_rate_hz;
    let duration = p.window_length as f64 / fs;
    let period = 1.0 / p.pulse_rate_hz;

    // Start one period early so a pulse straddling t=0 is present.
    let mut onsets = Vec::new();
    let mut onset = rng.random::<f64>() * period - period;
    while onset < duration + 5.0 * p.pulse_width_s {
        onsets.push(onset);
        let jitter = if p.rate_jitter > 0.0 {
            rng.random_range(-p.rate_jitter..p.rate_jitter)
        } else {
            0.0
        };
        onset += period * (1.0 + jitter);
    }

    let noise = Normal::new(0.0, p.noise_std).expect("noise_std checked");
    let two_pi = 2.0 * std::f64::consts::PI;
    let values = (0..p.channels)
        .map(|_| {
            let phase = rng.random::<f64>() * two_pi;
            (0..p.window_length)
                .map(|t| {
                    let time = t as f64 / fs;
                    let pulses: f64 = onsets
                        .iter()
                        .map(|&o| {
                            let z = (time - o) / p.pulse_width_s;
                            if z.abs() < 8.0 {
                                (-0.5 * z * z).exp()
                            } else {
                                0.0
                            }
                        })
                        .sum();
                    let baseline = if p.baseline_freq_hz > 0.0 {
                        p.baseline_amplitude * (two_pi * p.baseline_freq_hz * time + phase).sin()
                    } else {
                        0.0
                    };
                    let eps = if p.noise_std > 0.0 {
                        noise.sample(&mut rng)
                    } else {
                        0.0
                    };
                    pulses + baseline + eps
                })
                .collect()
        })
        .collect();
    Sample::new(format!("synthetic-{index:04}"), values)
}
