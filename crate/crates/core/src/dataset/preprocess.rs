use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Recording};
use crate::config::SplitFractions;
use crate::rng::rng_from_seed;
use crate::signal::{Mask, Sample, SignalSet, SplitTag};

/// Per-channel z-score statistics (population convention).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

/// Cuts a `channels × T` matrix into `floor(T / window_length)`
/// non-overlapping windows; the remainder is dropped.
pub fn window(continuous: &[Vec<f64>], window_length: usize) -> Result<Vec<Sample>, DatasetError> {
    let rec = Recording {
        id: "w".into(),
        channels: continuous.to_vec(),
        missing: None,
        channel_names: None,
    };
    window_recording(&rec, window_length)
}

/// Windows a recording, carrying its source-missing markers along. Sample
/// ids are `<recording id>#<window index>`.
pub fn window_recording(
    rec: &Recording,
    window_length: usize,
) -> Result<Vec<Sample>, DatasetError> {
    let total = rec.len();
    if window_length == 0 || total < window_length {
        return Err(DatasetError::InvalidValue(format!(
            "recording `{}` has {total} timesteps, shorter than window_length {window_length}",
            rec.id
        )));
    }
    let n = total / window_length;
    let samples = (0..n)
        .map(|k| {
            let range = k * window_length..(k + 1) * window_length;
            let values = rec
                .channels
                .iter()
                .map(|c| c[range.clone()].to_vec())
                .collect();
            let source_missing = rec.missing.as_ref().and_then(|m| {
                let rows: Vec<Vec<bool>> =
                    m.rows().iter().map(|r| r[range.clone()].to_vec()).collect();
                rows.iter()
                    .any(|r| r.iter().any(|&x| x))
                    .then(|| Mask::from_rows(rows))
            });
            Sample {
                id: format!("{}#{k}", rec.id),
                values,
                source_missing,
            }
        })
        .collect();
    Ok(samples)
}

/// Z-scores each channel over all samples of the set.
///
/// Source-missing positions are excluded from the statistics and set to 0
/// (the channel mean) in the output.
pub fn normalize_zscore(set: &SignalSet) -> Result<(SignalSet, Vec<ChannelStats>), DatasetError> {
    let channels = set.channels();
    let mut stats = Vec::with_capacity(channels);
    for c in 0..channels {
        let (mut n, mut sum) = (0usize, 0.0);
        for_each_observed(set, c, |v| {
            n += 1;
            sum += v;
        });
        if n == 0 {
            return Err(DatasetError::DegenerateChannel(c));
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for_each_observed(set, c, |v| ss += (v - mean) * (v - mean));
        let std = (ss / n as f64).sqrt();
        if std.is_nan() || std <= 0.0 || !std.is_finite() {
            return Err(DatasetError::DegenerateChannel(c));
        }
        stats.push(ChannelStats { mean, std });
    }

    let samples = set
        .samples
        .iter()
        .map(|s| {
            let values = s
                .values
                .iter()
                .enumerate()
                .map(|(c, row)| {
                    let ChannelStats { mean, std } = stats[c];
                    row.iter()
                        .enumerate()
                        .map(|(t, &v)| {
                            if s.source_missing.as_ref().is_some_and(|m| m.get(c, t)) {
                                0.0
                            } else {
                                (v - mean) / std
                            }
                        })
                        .collect()
                })
                .collect();
            Sample {
                id: s.id.clone(),
                values,
                source_missing: s.source_missing.clone(),
            }
        })
        .collect();
    Ok((set.with_samples(samples, set.split_tag), stats))
}

fn for_each_observed(set: &SignalSet, channel: usize, mut f: impl FnMut(f64)) {
    for s in &set.samples {
        let row = &s.values[channel];
        match &s.source_missing {
            Some(m) => row
                .iter()
                .zip(m.row(channel))
                .filter(|(_, &miss)| !miss)
                .for_each(|(&v, _)| f(v)),
            None => row.iter().for_each(|&v| f(v)),
        }
    }
}

/// Seeded shuffle, then contiguous partition into train/val/test with
/// `round(f·N)` counts for train and val and the remainder for test.
pub fn split(
    set: &SignalSet,
    fractions: SplitFractions,
    seed: u64,
) -> (SignalSet, SignalSet, SignalSet) {
    let n = set.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));

    let n_train = ((fractions.train * n as f64).round() as usize).min(n);
    let n_val = ((fractions.val * n as f64).round() as usize).min(n - n_train);
    let pick = |idx: &[usize], tag| {
        set.with_samples(idx.iter().map(|&i| set.samples[i].clone()).collect(), tag)
    };
    (
        pick(&order[..n_train], SplitTag::Train),
        pick(&order[n_train..n_train + n_val], SplitTag::Val),
        pick(&order[n_train + n_val..], SplitTag::Test),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::default_channel_names;
    use proptest::prelude::*;

    fn set_of(samples: Vec<Sample>) -> SignalSet {
        let channels = samples.first().map_or(1, Sample::channels);
        SignalSet {
            samples,
            sampling_rate_hz: 100.0,
            channel_names: default_channel_names(channels),
            split_tag: SplitTag::All,
        }
    }

    #[test]
    fn window_floor_rule() {
        let x = vec![(0..2500).map(f64::from).collect::<Vec<_>>()];
        let w = window(&x, 1000).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].values[0][999], 1999.0);
    }

    #[test]
    fn window_identity_and_too_short() {
        let x = vec![(0..1000).map(f64::from).collect::<Vec<_>>()];
        let w = window(&x, 1000).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].values, x);
        let short = vec![vec![0.0; 999]];
        assert!(matches!(
            window(&short, 1000),
            Err(DatasetError::InvalidValue(_))
        ));
    }

    #[test]
    fn zscore_hand_values() {
        let set = set_of(vec![Sample::new("a", vec![vec![1.0, 2.0, 3.0]])]);
        let (out, stats) = normalize_zscore(&set).unwrap();
        assert!((stats[0].mean - 2.0).abs() < 1e-15);
        assert!((stats[0].std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let v = &out.samples[0].values[0];
        assert!((v[0] + 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(v[1], 0.0);
        assert!((v[2] - 1.224_744_871_391_589).abs() < 1e-12);
    }

    #[test]
    fn zscore_idempotent_and_degenerate() {
        let set = set_of(vec![
            Sample::new("a", vec![vec![1.0, 5.0, -2.0, 0.5]]),
            Sample::new("b", vec![vec![3.0, 3.5, 9.0, -4.0]]),
        ]);
        let (once, _) = normalize_zscore(&set).unwrap();
        let (twice, _) = normalize_zscore(&once).unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            for (x, y) in a.values[0].iter().zip(&b.values[0]) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        let flat = set_of(vec![Sample::new("c", vec![vec![1.0; 4], vec![7.0; 4]])]);
        assert!(matches!(
            normalize_zscore(&flat),
            Err(DatasetError::DegenerateChannel(0))
        ));
    }

    #[test]
    fn zscore_skips_source_missing() {
        let mut s = Sample::new("a", vec![vec![1.0, 100.0, 3.0]]);
        s.source_missing = Some(Mask::from_rows(vec![vec![false, true, false]]));
        let (out, stats) = normalize_zscore(&set_of(vec![s])).unwrap();
        assert_eq!(stats[0].mean, 2.0);
        assert_eq!(out.samples[0].values[0], vec![-1.0, 0.0, 1.0]);
    }

    fn numbered(n: usize) -> SignalSet {
        set_of(
            (0..n)
                .map(|i| Sample::new(i.to_string(), vec![vec![i as f64; 4]]))
                .collect(),
        )
    }

    #[test]
    fn split_sizes() {
        let (a, b, c) = split(&numbered(10), SplitFractions::default(), 3);
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        let all_train = SplitFractions {
            train: 1.0,
            val: 0.0,
            test: 0.0,
        };
        let (a, b, c) = split(&numbered(10), all_train, 3);
        assert_eq!((a.len(), b.len(), c.len()), (10, 0, 0));
    }

    #[test]
    fn split_deterministic() {
        let set = numbered(25);
        let ids = |s: &SignalSet| s.samples.iter().map(|x| x.id.clone()).collect::<Vec<_>>();
        let (a1, _, c1) = split(&set, SplitFractions::default(), 11);
        let (a2, _, c2) = split(&set, SplitFractions::default(), 11);
        assert_eq!(ids(&a1), ids(&a2));
        assert_eq!(ids(&c1), ids(&c2));
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 1usize..=1000, tr in 0.0f64..=1.0, va_frac in 0.0f64..=1.0, seed: u64) {
            let va = (1.0 - tr) * va_frac;
            let fr = SplitFractions { train: tr, val: va, test: 1.0 - tr - va };
            let set = numbered(n);
            let (a, b, c) = split(&set, fr, seed);
            let mut seen: Vec<usize> = a.samples.iter().chain(&b.samples).chain(&c.samples)
                .map(|s| s.id.parse().unwrap()).collect();
            prop_assert_eq!(seen.len(), n);
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}
