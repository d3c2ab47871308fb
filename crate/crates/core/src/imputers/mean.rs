use super::{observed_points, FittedState, ImputeError, Imputed, Imputer, ParamIssue, ParamReader};
use crate::config::Params;
use crate::missingness::MaskedSample;
use crate::signal::SignalSet;

/// Where the fill value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanScope {
    /// Mean of the observed points of the same sample and channel.
    Sample,
    /// Per-channel mean over the training split, computed by `fit`.
    Train,
}

/// Replaces missing points with a per-channel mean.
#[derive(Debug, Clone)]
pub struct MeanFill {
    pub scope: MeanScope,
}

impl MeanFill {
    pub fn from_params(params: &Params) -> Result<Self, Vec<ParamIssue>> {
        let mut r = ParamReader::new(params);
        let scope = match r.choice("scope", &["sample", "train"]) {
            "train" => MeanScope::Train,
            _ => MeanScope::Sample,
        };
        r.finish()?;
        Ok(Self { scope })
    }
}

impl Imputer for MeanFill {
    fn name(&self) -> &str {
        super::MEAN_FILL
    }

    fn requires_fit(&self) -> bool {
        self.scope == MeanScope::Train
    }

    fn fit(&self, train: &SignalSet) -> Result<FittedState, ImputeError> {
        if self.scope == MeanScope::Sample {
            return Ok(FittedState::empty());
        }
        if train.is_empty() {
            return Err(ImputeError::EmptyDataset);
        }
        let channel_means = (0..train.channels())
            .map(|c| {
                let (mut n, mut sum) = (0usize, 0.0);
                for s in &train.samples {
                    for (t, &v) in s.values[c].iter().enumerate() {
                        if !s.source_missing.as_ref().is_some_and(|m| m.get(c, t)) {
                            n += 1;
                            sum += v;
                        }
                    }
                }
                if n == 0 {
                    Err(ImputeError::ChannelFullyMissing(c))
                } else {
                    Ok(sum / n as f64)
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(FittedState { channel_means })
    }

    fn impute(&self, masked: &MaskedSample, state: &FittedState) -> Result<Imputed, ImputeError> {
        let mask = masked.input_mask();
        let mut values = masked.observed.values.clone();
        for (c, row) in values.iter_mut().enumerate() {
            let missing = mask.row(c);
            if !missing.iter().any(|&m| m) {
                continue;
            }
            let fill = match self.scope {
                MeanScope::Sample => {
                    let obs = observed_points(row, missing);
                    if obs.is_empty() {
                        return Err(ImputeError::ChannelFullyMissing(c));
                    }
                    obs.iter().map(|&(_, v)| v).sum::<f64>() / obs.len() as f64
                }
                MeanScope::Train => *state
                    .channel_means
                    .get(c)
                    .ok_or(ImputeError::MissingFitState)?,
            };
            for (v, &m) in row.iter_mut().zip(missing) {
                if m {
                    *v = fill;
                }
            }
        }
        Ok(Imputed::plain(values))
    }
}
