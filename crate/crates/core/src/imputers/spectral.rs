//! Iterative sparse-spectrum gap filling.
//!
//! Missing points start at the observed mean. Each iteration transforms the
//! whole channel, keeps the `top_k` strongest frequencies (each with its
//! conjugate partner so the inverse stays real), inverse-transforms, and
//! writes the reconstruction back into the missing positions only. The loop
//! stops once the largest update at a missing position drops below `tol`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{observed_points, FittedState, ImputeError, Imputed, Imputer, ParamIssue, ParamReader};
use crate::config::Params;
use crate::missingness::MaskedSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftParams {
    /// Number of kept frequencies; a bin and its conjugate count once.
    pub top_k: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for FftParams {
    fn default() -> Self {
        Self {
            top_k: 10,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FftImputer {
    pub params: FftParams,
}

impl FftImputer {
    pub fn new(params: FftParams) -> Self {
        Self { params }
    }

    pub fn from_params(params: &Params) -> Result<Self, Vec<ParamIssue>> {
        let d = FftParams::default();
        let mut r = ParamReader::new(params);
        let p = FftParams {
            top_k: r.positive_int("top_k", d.top_k),
            max_iters: r.positive_int("max_iters", d.max_iters),
            tol: r.positive_real("tol", d.tol),
        };
        r.finish()?;
        Ok(Self { params: p })
    }
}

/// Forward and inverse plans for one transform length.
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

/// Unnormalized forward DFT, `X[k] = Σ x[t]·e^{−2πikt/T}`.
pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buf.is_empty() {
        Plans::new(x.len()).forward.process(&mut buf);
    }
    buf
}

/// Representative bins `0..=T/2` of the `top_k` largest magnitudes, ordered
/// by decreasing magnitude; ties go to the lower bin.
pub fn select_bins(spectrum: &[Complex64], top_k: usize) -> Vec<usize> {
    let half = spectrum.len() / 2;
    let mut bins: Vec<usize> = (0..=half).collect();
    bins.sort_by(|&a, &b| {
        spectrum[b]
            .norm()
            .total_cmp(&spectrum[a].norm())
            .then(a.cmp(&b))
    });
    bins.truncate(top_k);
    bins
}

fn project(x: &[f64], top_k: usize, plans: &Plans) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans.forward.process(&mut spec);

    let mut keep = vec![false; n];
    for k in select_bins(&spec, top_k) {
        keep[k] = true;
        keep[(n - k) % n] = true;
    }
    for (c, &k) in spec.iter_mut().zip(&keep) {
        if !k {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    plans.inverse.process(&mut spec);

    let scale = 1.0 / n as f64;
    let mut max_imag = 0.0f64;
    let real = spec
        .iter()
        .map(|c| {
            max_imag = max_imag.max((c.im * scale).abs());
            c.re * scale
        })
        .collect();
    (real, max_imag)
}

/// Keeps the `top_k` strongest frequency pairs of `x` and returns the real
/// reconstruction plus the largest imaginary residue of the inverse.
pub fn sparse_reconstruct(x: &[f64], top_k: usize) -> (Vec<f64>, f64) {
    if x.is_empty() {
        return (Vec::new(), 0.0);
    }
    project(x, top_k, &Plans::new(x.len()))
}

/// Runs the projection loop on one channel in place and returns
/// `(iterations, converged)`.
pub fn impute_channel_fft(
    values: &mut [f64],
    missing: &[bool],
    params: &FftParams,
    channel: usize,
) -> Result<(usize, bool), ImputeError> {
    let gaps: Vec<usize> = (0..values.len()).filter(|&t| missing[t]).collect();
    if gaps.is_empty() {
        return Ok((1, true));
    }
    let obs = observed_points(values, missing);
    match obs.len() {
        0 => return Err(ImputeError::ChannelFullyMissing(channel)),
        1 => {
            return Err(ImputeError::InsufficientObserved {
                channel,
                observed: 1,
            })
        }
        _ => {}
    }
    let mean = obs.iter().map(|&(_, v)| v).sum::<f64>() / obs.len() as f64;
    for &t in &gaps {
        values[t] = mean;
    }

    let plans = Plans::new(values.len());
    for iteration in 1..=params.max_iters {
        let (recon, _) = project(values, params.top_k, &plans);
        let mut delta = 0.0f64;
        for &t in &gaps {
            delta = delta.max((recon[t] - values[t]).abs());
            values[t] = recon[t];
        }
        if !delta.is_finite() {
            return Err(ImputeError::InvalidValue(format!(
                "non-finite update on channel {channel}"
            )));
        }
        if delta < params.tol {
            return Ok((iteration, true));
        }
    }
    Ok((params.max_iters, false))
}

impl Imputer for FftImputer {
    fn name(&self) -> &str {
        super::FFT
    }

    fn impute(&self, masked: &MaskedSample, _: &FittedState) -> Result<Imputed, ImputeError> {
        let p = &self.params;
        if p.top_k == 0 || p.max_iters == 0 || p.tol.is_nan() || p.tol <= 0.0 {
            return Err(ImputeError::InvalidValue(
                "top_k, max_iters and tol must be positive".into(),
            ));
        }
        if masked.observed.window_length() < 8 {
            return Err(ImputeError::InvalidValue(
                "fft imputation needs window_length >= 8".into(),
            ));
        }
        let mask = masked.input_mask();
        let mut values = masked.observed.values.clone();
        let mut iterations = 0;
        let mut converged = true;
        for (c, row) in values.iter_mut().enumerate() {
            let (it, ok) = impute_channel_fft(row, mask.row(c), p, c)?;
            iterations = iterations.max(it);
            converged &= ok;
        }
        Ok(Imputed {
            values,
            iterations: Some(iterations),
            converged: Some(converged),
        })
    }
}
