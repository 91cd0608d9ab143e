use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EstimationMethod, VisibilityEstimate};
use crate::drift::{rng_from_seed, CoincidenceTrace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinMaxOptions {
    /// Fraction of bins averaged at each extreme.
    pub quantile: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for MinMaxOptions {
    fn default() -> Self {
        Self { quantile: 0.02, bootstrap_resamples: 200, seed: 0 }
    }
}

const MIN_BINS: usize = 10;

fn contrast(sorted: &[f64], k: usize) -> Result<(f64, f64)> {
    let n = sorted.len();
    let low = sorted[..k].iter().sum::<f64>() / k as f64;
    let high = sorted[n - k..].iter().sum::<f64>() / k as f64;
    let sum = high + low;
    if sum <= 0.0 {
        return Err(Error::DegenerateTrace("C_max + C_min is zero".into()));
    }
    Ok(((high - low) / sum, sum))
}

/// V = (C_max − C_min)/(C_max + C_min) with the extremes taken as the means
/// of the top and bottom quantile of bins; standard error by bootstrap.
pub fn estimate_minmax(trace: &CoincidenceTrace, opts: &MinMaxOptions) -> Result<VisibilityEstimate> {
    let n = trace.len();
    if n < MIN_BINS {
        return Err(Error::InsufficientData(format!("min/max estimator needs ≥ {MIN_BINS} bins, got {n}")));
    }
    if !(opts.quantile > 0.0 && opts.quantile <= 0.5) {
        return Err(Error::domain(format!("quantile must lie in (0, 0.5], got {}", opts.quantile)));
    }
    let k = ((opts.quantile * n as f64).round() as usize).max(1);
    let mut sorted = trace.counts_f64();
    sorted.sort_by(f64::total_cmp);
    let (v, scale) = contrast(&sorted, k)?;

    let mut rng = rng_from_seed(opts.seed);
    let mut boot = Vec::with_capacity(opts.bootstrap_resamples);
    let mut resample = vec![0.0; n];
    for _ in 0..opts.bootstrap_resamples {
        for slot in resample.iter_mut() {
            *slot = sorted[rng.random_range(0..n)];
        }
        resample.sort_by(f64::total_cmp);
        if let Ok((bv, _)) = contrast(&resample, k) {
            boot.push(bv);
        }
    }
    let std_error = if boot.len() > 1 {
        let mean = boot.iter().sum::<f64>() / boot.len() as f64;
        (boot.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(VisibilityEstimate::new(v, std_error, EstimationMethod::MinMax, n, 0.0, scale))
}
