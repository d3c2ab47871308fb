use super::{observed_points, FittedState, ImputeError, Imputed, Imputer, ParamIssue, ParamReader};
use crate::config::Params;
use crate::missingness::MaskedSample;

/// Straight lines across interior gaps, nearest-value hold at the edges.
#[derive(Debug, Clone, Default)]
pub struct LinearInterp;

impl LinearInterp {
    pub fn from_params(params: &Params) -> Result<Self, Vec<ParamIssue>> {
        let mut r = ParamReader::new(params);
        r.choice("edge_mode", &["hold"]);
        r.finish()?;
        Ok(Self)
    }
}

/// Interpolates one channel in place. Needs at least two observed points.
pub fn interpolate_channel(
    values: &mut [f64],
    missing: &[bool],
    channel: usize,
) -> Result<(), ImputeError> {
    if !missing.iter().any(|&m| m) {
        return Ok(());
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
    let (first_t, first_v) = obs[0];
    let (last_t, last_v) = obs[obs.len() - 1];
    values[..first_t].fill(first_v);
    values[last_t + 1..].fill(last_v);
    for pair in obs.windows(2) {
        let ((i, l), (j, r)) = (pair[0], pair[1]);
        let span = (j - i) as f64;
        for (k, v) in values.iter_mut().enumerate().take(j).skip(i + 1) {
            *v = l + (r - l) * (k - i) as f64 / span;
        }
    }
    Ok(())
}

impl Imputer for LinearInterp {
    fn name(&self) -> &str {
        super::LINEAR_INTERP
    }

    fn impute(&self, masked: &MaskedSample, _: &FittedState) -> Result<Imputed, ImputeError> {
        let mask = masked.input_mask();
        let mut values = masked.observed.values.clone();
        for (c, row) in values.iter_mut().enumerate() {
            interpolate_channel(row, mask.row(c), c)?;
        }
        Ok(Imputed::plain(values))
    }
}
