//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's transform or bin selection: the
//! DFT is the textbook O(T²) sum and the gap-filling loop is written out
//! directly on top of it.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Direct DFT, `X[k] = Σ_t x[t]·(cos(2πkt/T) − i·sin(2πkt/T))`, as (re, im).
pub fn direct_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in x.iter().enumerate() {
                // Reduce k·t mod n first so the angle stays small.
                let angle = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            (re, im)
        })
        .collect()
}

/// Direct inverse DFT, real part only, with the 1/T factor.
pub fn direct_idft_real(spec: &[(f64, f64)]) -> Vec<f64> {
    let n = spec.len();
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for (k, &(re, im)) in spec.iter().enumerate() {
                let angle = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                acc += re * angle.cos() - im * angle.sin();
            }
            acc / n as f64
        })
        .collect()
}

/// Brute-force sparse-spectrum gap filling on one channel.
///
/// Returns `(filled, iterations, converged)`.
pub fn brute_force_fft_fill(
    x: &[f64],
    missing: &[bool],
    top_k: usize,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, usize, bool) {
    let n = x.len();
    let mut y = x.to_vec();
    let observed: Vec<f64> = (0..n).filter(|&t| !missing[t]).map(|t| x[t]).collect();
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    for t in 0..n {
        if missing[t] {
            y[t] = mean;
        }
    }
    if !missing.iter().any(|&m| m) {
        return (y, 1, true);
    }
    for it in 1..=max_iters {
        let spec = direct_dft(&y);
        // Rank representative bins 0..=n/2 by magnitude, lower bin on ties.
        let mut reps: Vec<(f64, usize)> = (0..=n / 2)
            .map(|k| ((spec[k].0.powi(2) + spec[k].1.powi(2)).sqrt(), k))
            .collect();
        let mut kept = vec![false; n];
        for _ in 0..top_k.min(reps.len()) {
            let mut best = 0;
            for i in 1..reps.len() {
                let (m, k) = reps[i];
                let (bm, bk) = reps[best];
                if m > bm || (m == bm && k < bk) {
                    best = i;
                }
            }
            let (_, k) = reps.remove(best);
            kept[k] = true;
            kept[(n - k) % n] = true;
        }
        let sparse: Vec<(f64, f64)> = spec
            .iter()
            .enumerate()
            .map(|(k, &c)| if kept[k] { c } else { (0.0, 0.0) })
            .collect();
        let recon = direct_idft_real(&sparse);
        let mut delta = 0.0f64;
        for t in 0..n {
            if missing[t] {
                delta = delta.max((recon[t] - y[t]).abs());
                y[t] = recon[t];
            }
        }
        if delta < tol {
            return (y, it, true);
        }
    }
    (y, max_iters, false)
}

/// `sin(2π·5t/256) + 0.5·sin(2π·12t/256)` for `t = 0..256`.
pub fn two_tone() -> Vec<f64> {
    (0..256)
        .map(|t| {
            let t = t as f64;
            (2.0 * PI * 5.0 * t / 256.0).sin() + 0.5 * (2.0 * PI * 12.0 * t / 256.0).sin()
        })
        .collect()
}
