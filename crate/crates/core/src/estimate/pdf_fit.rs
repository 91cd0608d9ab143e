//! Visibility from the distribution of counts of a free-running trace.
//!
//! With a uniformly explored phase the count level follows an arcsine law on
//! [C_min, C_max]. The default mode histograms the counts and fits the
//! bin-integrated arcsine law to the bins at or below the median count, where
//! Poisson smearing is smallest in absolute terms. The alternative mode
//! maximizes the likelihood of a Poisson mixture over a uniform phase, which
//! models the smearing instead of avoiding it.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::arcsine::count_cdf;
use super::{quantile_sorted, EstimationMethod, VisibilityEstimate};
use crate::drift::CoincidenceTrace;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdfFitMode {
    #[default]
    LeftHistogram,
    PoissonMl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfFitOptions {
    #[serde(default)]
    pub mode: PdfFitMode,
    /// Lower bound on the number of histogram bins.
    #[serde(default = "default_min_bins")]
    pub min_histogram_bins: usize,
}

fn default_min_bins() -> usize {
    20
}

impl Default for PdfFitOptions {
    fn default() -> Self {
        Self { mode: PdfFitMode::LeftHistogram, min_histogram_bins: default_min_bins() }
    }
}

impl PdfFitOptions {
    pub fn poisson_ml() -> Self {
        Self { mode: PdfFitMode::PoissonMl, ..Default::default() }
    }
}

pub const MIN_TRACE_BINS: usize = 100;
const MIN_POPULATED_BINS: usize = 5;
const MAX_HISTOGRAM_BINS: usize = 1000;

/// Freedman–Diaconis bin count, at least `floor`.
pub fn freedman_diaconis_bins(sorted: &[f64], floor: usize) -> usize {
    let n = sorted.len();
    let range = sorted[n - 1] - sorted[0];
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let fd = if width > 0.0 { (range / width).ceil() as usize } else { 1 };
    fd.clamp(floor.max(1), MAX_HISTOGRAM_BINS.max(floor))
}

/// Equal-width histogram over [min, max]; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CountHistogram {
    pub fn build(values: &[f64], n_bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n_bins = n_bins.max(1);
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|i| if i == n_bins { hi } else { lo + width * i as f64 }).collect();
        let mut counts = vec![0u64; n_bins];
        for &v in values {
            let idx = if width > 0.0 { (((v - lo) / width) as usize).min(n_bins - 1) } else { 0 };
            counts[idx] += 1;
        }
        Self { edges, counts }
    }

    pub fn populated(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Expected bin counts of an arcsine law on [c_min, c_max] for `n` samples.
    pub fn arcsine_expectation(&self, c_min: f64, c_max: f64, n: f64) -> Vec<f64> {
        self.edges.windows(2).map(|e| n * (count_cdf(e[1], c_min, c_max) - count_cdf(e[0], c_min, c_max))).collect()
    }
}

/// Fits the arcsine law of a free-running trace and reports its visibility.
pub fn estimate_pdf_fit(trace: &CoincidenceTrace, opts: &PdfFitOptions) -> Result<VisibilityEstimate> {
    if trace.len() < MIN_TRACE_BINS {
        return Err(Error::InsufficientData(format!(
            "distribution fit needs ≥ {MIN_TRACE_BINS} bins, got {}",
            trace.len()
        )));
    }
    let mut sorted = trace.counts_f64();
    sorted.sort_by(f64::total_cmp);
    let hist = CountHistogram::build(&sorted, freedman_diaconis_bins(&sorted, opts.min_histogram_bins));
    if sorted[0] == sorted[sorted.len() - 1] || hist.populated() < MIN_POPULATED_BINS {
        return Err(Error::InsufficientData(format!(
            "count histogram has {} populated bins, need {MIN_POPULATED_BINS}",
            hist.populated()
        )));
    }
    match opts.mode {
        PdfFitMode::LeftHistogram => left_histogram_fit(&sorted, hist.counts.len()),
        PdfFitMode::PoissonMl => poisson_mixture_fit(&sorted),
    }
}

fn visibility_from_edges(c_min: f64, c_max: f64, cov: Option<Matrix2<f64>>) -> (f64, f64) {
    let s = c_min + c_max;
    let v = (c_max - c_min) / s;
    let se = cov
        .map(|c| {
            let g = Vector2::new(-2.0 * c_max / (s * s), 2.0 * c_min / (s * s));
            (g.transpose() * c * g)[(0, 0)].max(0.0).sqrt()
        })
        .unwrap_or(f64::NAN);
    (v, se)
}

fn left_histogram_fit(raw: &[f64], n_bins: usize) -> Result<VisibilityEstimate> {
    // fit in units of the largest count so that rescaled traces see the same problem
    let unit = raw[raw.len() - 1];
    let sorted: Vec<f64> = raw.iter().map(|c| c / unit).collect();
    let sorted = sorted.as_slice();
    let hist = &CountHistogram::build(sorted, n_bins);
    let n = sorted.len() as f64;
    let median = quantile_sorted(sorted, 0.5);
    let selected: Vec<usize> = (0..hist.counts.len()).filter(|&i| hist.edges[i + 1] <= median).collect();
    if selected.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} histogram bins lie below the median count",
            selected.len()
        )));
    }
    let residuals = |p: &[f64], out: &mut [f64]| {
        let (c_min, c_max) = (p[0], p[1]);
        for (o, &i) in out.iter_mut().zip(&selected) {
            let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
            let expected = if c_max > c_min {
                n * (count_cdf(hi, c_min, c_max) - count_cdf(lo, c_min, c_max))
            } else {
                f64::NAN
            };
            // Pearson weighting with a floor for empty model bins
            *o = (hist.counts[i] as f64 - expected) / expected.max(1.0).sqrt();
        }
    };
    let p0 = [quantile_sorted(sorted, 0.01), quantile_sorted(sorted, 0.99)];
    let fit = levenberg_marquardt(residuals, &p0, selected.len(), &LmOptions::default())?;
    let (c_min, c_max) = (fit.params[0] * unit, fit.params[1] * unit);
    if !(c_max > c_min) {
        return Err(Error::Fit(format!("arcsine fit collapsed: c_min {c_min}, c_max {c_max}")));
    }
    let u2 = unit * unit;
    let cov = fit.covariance.as_ref().map(|c| Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]) * u2);
    let (v, se) = visibility_from_edges(c_min, c_max, cov);
    let mut est =
        VisibilityEstimate::new(v, se, EstimationMethod::PdfFit, selected.len(), fit.residual_norm(), c_min + c_max);
    if c_min < 0.0 {
        est.warnings.push(format!("fitted minimum count {c_min:.3} is negative"));
    }
    Ok(est)
}

const MAX_PHASE_NODES: usize = 1 << 20;

/// Phase nodes fine enough to resolve a Poisson peak of width √μ moving at
/// dμ/dφ ≈ h.
fn phase_nodes(mid: f64, half_range: f64) -> Vec<f64> {
    let width = mid.max(1.0).sqrt() / half_range.max(1e-9);
    let n = ((2.0 * PI / width).ceil() as usize).clamp(128, MAX_PHASE_NODES);
    (0..n).map(|j| ((j as f64 + 0.5) / n as f64 * PI).cos()).collect()
}

struct Mixture<'a> {
    values: &'a [f64],
    weights: &'a [f64],
    cosines: &'a [f64],
}

struct MixtureEval {
    loglik: f64,
    gradient: Vector2<f64>,
    hessian: Matrix2<f64>,
}

impl Mixture<'_> {
    /// Log-likelihood (up to the Σ ln k! constant) and its derivatives with
    /// respect to (mid, half_range), with μ_j = mid + half_range·cos φ_j.
    fn eval(&self, mid: f64, half: f64) -> Option<MixtureEval> {
        let m = self.cosines.len();
        let mut mu = Vec::with_capacity(m);
        let mut ln_mu = Vec::with_capacity(m);
        for &c in self.cosines {
            let u = mid + half * c;
            if !(u > 0.0) {
                return None;
            }
            mu.push(u);
            ln_mu.push(u.ln());
        }
        let mut loglik = 0.0;
        let mut gradient = Vector2::zeros();
        let mut hessian = Matrix2::zeros();
        let mut lp = vec![0.0; m];
        for (&k, &w) in self.values.iter().zip(self.weights) {
            // nodes whose Poisson weight is below e^-50 of the peak are skipped;
            // μ decreases along the nodes because the cosines do
            let reach = 10.0 * (k + 1.0).sqrt() + 40.0;
            let mut lo = mu.partition_point(|&u| u > k + reach);
            let mut hi = mu.partition_point(|&u| u >= k - reach);
            if lo >= hi {
                (lo, hi) = (0, m);
            }
            let mut top = f64::NEG_INFINITY;
            for j in lo..hi {
                lp[j] = k * ln_mu[j] - mu[j];
                top = top.max(lp[j]);
            }
            let (mut z, mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for j in lo..hi {
                let p = (lp[j] - top).exp();
                let d1 = k / mu[j] - 1.0;
                let d2 = d1 * d1 - k / (mu[j] * mu[j]);
                let c = self.cosines[j];
                z += p;
                g0 += p * d1;
                g1 += p * d1 * c;
                h00 += p * d2;
                h01 += p * d2 * c;
                h11 += p * d2 * c * c;
            }
            let g = Vector2::new(g0 / z, g1 / z);
            loglik += w * (top + (z / m as f64).ln());
            gradient += w * g;
            hessian += w * (Matrix2::new(h00 / z, h01 / z, h01 / z, h11 / z) - g * g.transpose());
        }
        Some(MixtureEval { loglik, gradient, hessian })
    }
}

fn poisson_mixture_fit(sorted: &[f64]) -> Result<VisibilityEstimate> {
    let n = sorted.len() as f64;
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for &c in sorted {
        if values.last() == Some(&c) {
            *weights.last_mut().unwrap() += 1.0;
        } else {
            values.push(c);
            weights.push(1.0);
        }
    }
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // arcsine variance h²/2 on top of the Poisson variance
    let mut mid = mean.max(1e-3);
    let mut half = (2.0 * (var - mean).max(0.0)).sqrt().min(0.999 * mid).max(1e-3 * mid);

    let cosines = phase_nodes(mid, half);
    let mix = Mixture { values: &values, weights: &weights, cosines: &cosines };
    let mut cur = mix.eval(mid, half).ok_or_else(|| Error::Fit("invalid starting point".into()))?;
    let mut converged = false;
    for _ in 0..100 {
        let neg_h = -cur.hessian;
        let step = match neg_h.cholesky() {
            Some(ch) => ch.solve(&cur.gradient),
            // ascent direction scaled to the parameter size
            None => cur.gradient * (0.01 * mid / cur.gradient.norm().max(1e-300)),
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let (m1, h1) = (mid + t * step[0], half + t * step[1]);
            if let Some(next) = (h1 > 0.0).then(|| mix.eval(m1, h1)).flatten() {
                if next.loglik >= cur.loglik - 1e-12 * cur.loglik.abs() {
                    mid = m1;
                    half = h1;
                    cur = next;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        let rel = (t * step[0]).abs() / mid + (t * step[1]).abs() / half;
        // the likelihood is flat to rounding below a relative step of ~1e-10
        if !accepted || rel < 1e-9 {
            converged = accepted || rel < 1e-9;
            break;
        }
    }
    let fisher = -cur.hessian;
    let cov = fisher.try_inverse().filter(|c| c[(0, 0)] >= 0.0 && c[(1, 1)] >= 0.0);
    let v = half / mid;
    let se = cov
        .map(|c| {
            let g = Vector2::new(-half / (mid * mid), 1.0 / mid);
            (g.transpose() * c * g)[(0, 0)].max(0.0).sqrt()
        })
        .unwrap_or(f64::NAN);
    let mut est = VisibilityEstimate::new(v, se, EstimationMethod::PdfFit, sorted.len(), -cur.loglik, 2.0 * mid);
    if !converged {
        est.warnings.push("Poisson-mixture likelihood did not converge".into());
    }
    Ok(est)
}
