//! End-to-end chromatic-dispersion measurement from free-running traces.
//!
//! Method A (inflexion point) inverts the Gaussian visibility law trace by
//! trace at a single bandwidth chosen near γ = √(2/3). Method B (multiple
//! operating points) fits the same law across several bandwidths with |β⁽²⁾|
//! as the only free parameter. Both require a narrowband calibration run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::CoincidenceTrace;
use crate::error::{Error, Result};
use crate::estimate::{estimate, freedman_diaconis_bins, CountHistogram, EstimatorConfig, VisibilityEstimate};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::gaussian::{cd_from_gamma, invert_visibility, visibility_closed_form};
use crate::model::units;

pub const RESULT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CALIBRATION_THRESHOLD: f64 = 0.99;
pub const MIN_BANDWIDTHS: usize = 3;
const CD_HISTOGRAM_MIN_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub visibility: f64,
    pub std_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Estimates the visibility of a narrowband (γ ≈ 0) trace and compares it
/// with `threshold`.
pub fn calibrate(trace: &CoincidenceTrace, estimator: &EstimatorConfig, threshold: f64) -> Result<CalibrationReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::config(format!("calibration threshold must lie in (0, 1], got {threshold}")));
    }
    let est = estimate(trace, estimator)?;
    Ok(CalibrationReport {
        visibility: est.visibility,
        std_error: est.std_error,
        threshold,
        passed: est.visibility >= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineOptions {
    pub estimator: EstimatorConfig,
    /// Wavelength at which β⁽²⁾ is converted to D.
    pub wavelength_m: f64,
    /// Run the CD methods even when calibration failed.
    pub ignore_calibration: bool,
}

impl PipelineOptions {
    pub fn new(estimator: EstimatorConfig, wavelength_m: f64) -> Self {
        Self { estimator, wavelength_m, ignore_calibration: false }
    }

    fn check_calibration(&self, calibration: &CalibrationReport) -> Result<()> {
        if calibration.passed || self.ignore_calibration {
            Ok(())
        } else {
            Err(Error::Calibration { visibility: calibration.visibility, threshold: calibration.threshold })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdMethod {
    InflexionPoint,
    MultiPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleFlag {
    /// V̂ ≥ 1 before clipping; γ̂ = 0 and the sample is excluded.
    AtDomainEdge,
    /// V̂ ≤ 0; no γ̂ exists.
    NoContrast,
}

/// One repetition: a single trace and, for method A, its D value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdSample {
    /// Bandwidth index for method B; zero for method A.
    pub point: usize,
    pub visibility: f64,
    pub unclamped_visibility: f64,
    pub visibility_std_error: f64,
    pub gamma: Option<f64>,
    pub d_ps_nm_km: Option<f64>,
    pub flag: Option<SampleFlag>,
}

/// Gaussian A·exp(−(x − μ)²/(2s²)) fitted to a histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    pub mean_std_error: f64,
    pub histogram: CountHistogram,
}

impl GaussianFit {
    pub fn eval(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            return if x == self.mean { self.amplitude } else { 0.0 };
        }
        let z = (x - self.mean) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflexionDetails {
    pub sigma_omega: f64,
    pub length_m: f64,
    pub gaussian: GaussianFit,
    pub sample_mean: f64,
    pub sample_std: f64,
    pub std_error_of_mean: f64,
    pub n_used: usize,
    pub n_flagged: usize,
    pub mean_visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPoint {
    pub sigma_omega: f64,
    pub sigma_lambda_nm: f64,
    pub visibility: f64,
    pub std_error: f64,
    pub n_traces: usize,
    pub model_visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPointFit {
    pub beta2: f64,
    /// Unscaled (weights taken as exact) standard error of |β⁽²⁾|.
    pub beta2_std_error: f64,
    pub reduced_chi2: f64,
    /// Weighted residuals (V̂ − V)/se at the optimum.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPointDetails {
    pub length_m: f64,
    pub points: Vec<BandwidthPoint>,
    pub fit: MultiPointFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitDetails {
    Inflexion(InflexionDetails),
    MultiPoint(MultiPointDetails),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdResult {
    pub schema: u32,
    pub method: CdMethod,
    /// |D| in ps/(nm·km).
    pub d_ps_nm_km: f64,
    /// |β⁽²⁾| in s²/m.
    pub beta2: f64,
    /// In ps/(nm·km).
    pub std_error: f64,
    pub beta2_std_error: f64,
    pub samples: Vec<CdSample>,
    pub fit_details: FitDetails,
    pub calibration: CalibrationReport,
}

fn estimate_all(traces: &[CoincidenceTrace], estimator: &EstimatorConfig) -> Result<Vec<VisibilityEstimate>> {
    // indexed collect keeps input order whatever the thread count
    traces.par_iter().map(|t| estimate(t, estimator)).collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Least-squares Gaussian fit to the Freedman–Diaconis histogram of `values`.
pub fn fit_gaussian_histogram(values: &[f64]) -> Result<GaussianFit> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!("{} values cannot define a histogram fit", values.len())));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, std) = mean_std(&sorted);
    if !(std > 0.0) {
        // a point mass: nothing to fit
        return Ok(GaussianFit {
            amplitude: sorted.len() as f64,
            mean,
            sigma: 0.0,
            mean_std_error: 0.0,
            histogram: CountHistogram::build(&sorted, 1),
        });
    }
    let hist = CountHistogram::build(&sorted, freedman_diaconis_bins(&sorted, CD_HISTOGRAM_MIN_BINS));
    let centers: Vec<f64> = hist.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let width = hist.edges[1] - hist.edges[0];
    let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    // fit in units of the sample spread for conditioning
    let residuals = |p: &[f64], out: &mut [f64]| {
        for ((o, &x), &c) in out.iter_mut().zip(&centers).zip(&counts) {
            let z = ((x - mean) / std - p[1]) / p[2];
            *o = p[0] * (-0.5 * z * z).exp() - c;
        }
    };
    let p0 = [sorted.len() as f64 * width / (std * (2.0 * std::f64::consts::PI).sqrt()), 0.0, 1.0];
    let fit = levenberg_marquardt(residuals, &p0, centers.len(), &LmOptions::default())?;
    let sigma = fit.params[2].abs() * std;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Fit("histogram Gaussian collapsed".into()));
    }
    Ok(GaussianFit {
        amplitude: fit.params[0],
        mean: mean + fit.params[1] * std,
        sigma,
        mean_std_error: fit.param_std(1, true).map_or(f64::NAN, |s| s * std),
        histogram: hist,
    })
}

fn d_to_beta2(d_ps_nm_km: f64, wavelength: f64) -> Result<f64> {
    Ok(units::d_ps_nm_km_to_beta2(d_ps_nm_km, wavelength)?.abs())
}

fn check_geometry(sigma_omega: f64, length: f64) -> Result<()> {
    if sigma_omega > 0.0 && length > 0.0 && sigma_omega.is_finite() && length.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("need positive σ_ω and L, got {sigma_omega} and {length}")))
    }
}

/// Method A: per-trace V̂ → γ̂ → D, aggregated by a Gaussian fit to the
/// histogram of D.
pub fn method_inflexion(
    traces: &[CoincidenceTrace],
    sigma_omega: f64,
    length: f64,
    calibration: &CalibrationReport,
    opts: &PipelineOptions,
) -> Result<CdResult> {
    opts.check_calibration(calibration)?;
    check_geometry(sigma_omega, length)?;
    if traces.is_empty() {
        return Err(Error::InsufficientData("no traces".into()));
    }
    let estimates = estimate_all(traces, &opts.estimator)?;
    let mut samples = Vec::with_capacity(estimates.len());
    for est in &estimates {
        let raw = est.diagnostics.unclamped_visibility;
        let (gamma, d, flag) = if raw >= 1.0 {
            (Some(0.0), Some(0.0), Some(SampleFlag::AtDomainEdge))
        } else if raw <= 0.0 {
            (None, None, Some(SampleFlag::NoContrast))
        } else {
            let g = invert_visibility(raw)?.gamma;
            let cd = cd_from_gamma(g, sigma_omega, length, opts.wavelength_m)?;
            (Some(g), Some(cd.d_ps_nm_km), None)
        };
        samples.push(CdSample {
            point: 0,
            visibility: est.visibility,
            unclamped_visibility: raw,
            visibility_std_error: est.std_error,
            gamma,
            d_ps_nm_km: d,
            flag,
        });
    }
    let used: Vec<f64> = samples.iter().filter(|s| s.flag.is_none()).filter_map(|s| s.d_ps_nm_km).collect();
    let n_flagged = samples.len() - used.len();
    let (sample_mean, sample_std) = mean_std(&used);
    let gaussian = fit_gaussian_histogram(&used)?;
    let d = gaussian.mean.abs();
    let beta2 = d_to_beta2(d, opts.wavelength_m)?;
    let beta2_std_error = d_to_beta2(gaussian.sigma, opts.wavelength_m)?;
    let mean_visibility = samples.iter().map(|s| s.visibility).sum::<f64>() / samples.len() as f64;
    Ok(CdResult {
        schema: RESULT_SCHEMA_VERSION,
        method: CdMethod::InflexionPoint,
        d_ps_nm_km: d,
        beta2,
        std_error: gaussian.sigma,
        beta2_std_error,
        samples,
        fit_details: FitDetails::Inflexion(InflexionDetails {
            sigma_omega,
            length_m: length,
            sample_mean,
            sample_std,
            std_error_of_mean: sample_std / (used.len() as f64).sqrt(),
            n_used: used.len(),
            n_flagged,
            mean_visibility,
            gaussian,
        }),
        calibration: *calibration,
    })
}

/// Weighted least-squares fit of V(σ_k) = (γ_k² + 1)^(−1/4) with
/// γ_k = 2σ_k²|β⁽²⁾|L to measured visibilities.
pub fn fit_multipoint(sigma_omega: &[f64], visibility: &[f64], std_error: &[f64], length: f64) -> Result<MultiPointFit> {
    let n = sigma_omega.len();
    if visibility.len() != n || std_error.len() != n {
        return Err(Error::config("bandwidth, visibility and error lists differ in length"));
    }
    let mut distinct = sigma_omega.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_BANDWIDTHS {
        return Err(Error::config(format!(
            "multi-point method needs ≥ {MIN_BANDWIDTHS} distinct bandwidths, got {}",
            distinct.len()
        )));
    }
    for &s in sigma_omega {
        check_geometry(s, length)?;
    }
    if std_error.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::domain("visibility standard errors must be positive"));
    }
    // the parameter is γ at the largest bandwidth, which is O(1)
    let s_ref = distinct[distinct.len() - 1];
    let to_gamma_ref = 2.0 * s_ref * s_ref * length;
    let mut inversions: Vec<f64> = sigma_omega
        .iter()
        .zip(visibility)
        .filter(|(_, &v)| v > 0.0 && v < 1.0)
        .map(|(&s, &v)| invert_visibility(v).map(|g| g.gamma * (s_ref / s).powi(2)))
        .collect::<Result<_>>()?;
    if inversions.is_empty() {
        return Err(Error::Fit("no visibility lies strictly inside (0, 1)".into()));
    }
    inversions.sort_by(f64::total_cmp);
    let p0 = inversions[inversions.len() / 2].max(1e-6);

    let ratios: Vec<f64> = sigma_omega.iter().map(|s| (s / s_ref).powi(2)).collect();
    let residuals = |p: &[f64], out: &mut [f64]| {
        for (k, o) in out.iter_mut().enumerate() {
            let model = visibility_closed_form(p[0] * ratios[k]);
            *o = (visibility[k] - model) / std_error[k];
        }
    };
    let fit = levenberg_marquardt(residuals, &[p0], n, &LmOptions::default())?;
    let mut r = vec![0.0; n];
    residuals(&fit.params, &mut r);
    let gamma_ref = fit.params[0].abs();
    let se = fit.param_std(0, false).ok_or_else(|| Error::Fit("singular multi-point covariance".into()))?;
    Ok(MultiPointFit {
        beta2: gamma_ref / to_gamma_ref,
        beta2_std_error: se / to_gamma_ref,
        reduced_chi2: fit.reduced_chi2(),
        residuals: r,
        iterations: fit.iterations,
    })
}

/// Floor for a per-bandwidth error that came out as zero (identical V̂).
const MIN_VISIBILITY_STD_ERROR: f64 = 1e-9;

/// Method B: one V̂ per bandwidth (mean over its traces), then a one-parameter
/// fit of the Gaussian visibility law across bandwidths.
pub fn method_multipoint(
    points: &[(f64, Vec<CoincidenceTrace>)],
    length: f64,
    calibration: &CalibrationReport,
    opts: &PipelineOptions,
) -> Result<CdResult> {
    opts.check_calibration(calibration)?;
    let sigmas: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut distinct = sigmas.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_BANDWIDTHS {
        return Err(Error::config(format!(
            "multi-point method needs ≥ {MIN_BANDWIDTHS} distinct bandwidths, got {}",
            distinct.len()
        )));
    }
    let mut samples = Vec::new();
    let mut vis = Vec::with_capacity(points.len());
    let mut ses = Vec::with_capacity(points.len());
    for (k, (sigma, traces)) in points.iter().enumerate() {
        check_geometry(*sigma, length)?;
        if traces.is_empty() {
            return Err(Error::InsufficientData(format!("bandwidth {k} has no traces")));
        }
        let estimates = estimate_all(traces, &opts.estimator)?;
        let raw: Vec<f64> = estimates.iter().map(|e| e.diagnostics.unclamped_visibility).collect();
        let (mean, std) = mean_std(&raw);
        vis.push(mean);
        ses.push((std / (raw.len() as f64).sqrt()).max(MIN_VISIBILITY_STD_ERROR));
        samples.extend(estimates.iter().map(|e| CdSample {
            point: k,
            visibility: e.visibility,
            unclamped_visibility: e.diagnostics.unclamped_visibility,
            visibility_std_error: e.std_error,
            gamma: None,
            d_ps_nm_km: None,
            flag: None,
        }));
    }
    let fit = fit_multipoint(&sigmas, &vis, &ses, length)?;
    let d = units::beta2_to_d_ps_nm_km(fit.beta2, opts.wavelength_m)?.abs();
    let d_se = units::beta2_to_d_ps_nm_km(fit.beta2_std_error, opts.wavelength_m)?.abs();
    let mut table: Vec<BandwidthPoint> = points
        .iter()
        .enumerate()
        .map(|(k, (sigma, traces))| {
            Ok(BandwidthPoint {
                sigma_omega: *sigma,
                sigma_lambda_nm: units::sigma_omega_to_lambda(*sigma, opts.wavelength_m)? * 1e9,
                visibility: vis[k],
                std_error: ses[k],
                n_traces: traces.len(),
                model_visibility: visibility_closed_form(2.0 * sigma * sigma * fit.beta2 * length),
            })
        })
        .collect::<Result<_>>()?;
    table.sort_by(|a, b| a.sigma_omega.total_cmp(&b.sigma_omega));
    Ok(CdResult {
        schema: RESULT_SCHEMA_VERSION,
        method: CdMethod::MultiPoint,
        d_ps_nm_km: d,
        beta2: fit.beta2,
        std_error: d_se,
        beta2_std_error: fit.beta2_std_error,
        samples,
        fit_details: FitDetails::MultiPoint(MultiPointDetails { length_m: length, points: table, fit }),
        calibration: *calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{simulate_trace, CountNoise, DetectorModel, DriftProcess};
    use crate::estimate::PdfFitOptions;
    use crate::gaussian::{inflexion_gamma, sigma_for_gamma};

    const LAMBDA0: f64 = 1560.46e-9;

    fn passed() -> CalibrationReport {
        CalibrationReport { visibility: 1.0, std_error: 0.0, threshold: 0.99, passed: true }
    }

    fn opts() -> PipelineOptions {
        PipelineOptions::new(EstimatorConfig::PdfFit(PdfFitOptions::poisson_ml()), LAMBDA0)
    }

    fn trace(v: f64, seed: u64, noise: CountNoise, mean_max: f64, n: usize) -> CoincidenceTrace {
        let mut det = DetectorModel::new(0.1, mean_max / 0.1, seed);
        det.noise = noise;
        simulate_trace(v, 0.0, &DriftProcess::UniformRandomPhase, &det, n).unwrap()
    }

    #[test]
    fn calibration_threshold() {
        let est = EstimatorConfig::PdfFit(PdfFitOptions::poisson_ml());
        let full = trace(1.0, 1, CountNoise::Poisson, 1000.0, 500);
        assert!(calibrate(&full, &est, DEFAULT_CALIBRATION_THRESHOLD).unwrap().passed);
        let low = trace(0.95, 2, CountNoise::Poisson, 1000.0, 500);
        let report = calibrate(&low, &est, DEFAULT_CALIBRATION_THRESHOLD).unwrap();
        assert!(!report.passed);
        assert!(calibrate(&low, &est, 0.94).unwrap().passed);
        let err = method_inflexion(&[low], 1e12, 1.0, &report, &opts()).unwrap_err();
        assert!(matches!(err, Error::Calibration { .. }));
    }

    #[test]
    fn single_noiseless_trace_inverts_exactly() {
        let d_true = 17.0;
        let beta2 = d_to_beta2(d_true, LAMBDA0).unwrap();
        let sigma = sigma_for_gamma(inflexion_gamma(), beta2, 2.4).unwrap();
        let v = visibility_closed_form(inflexion_gamma());
        // golden-ratio phase steps sample the fringe evenly without noise
        let mut det = DetectorModel::new(0.1, 1e8, 3);
        det.noise = CountNoise::Noiseless;
        let drift = DriftProcess::Linear { rate_rad_per_s: 2.0 * std::f64::consts::PI * 0.618_033_988_749_895 / 0.1 };
        let t = simulate_trace(v, 0.0, &drift, &det, 20_000).unwrap();
        let mut o = opts();
        o.estimator = EstimatorConfig::PdfFit(PdfFitOptions::default());
        let traces = vec![t; 5];
        let r = method_inflexion(&traces, sigma, 2.4, &passed(), &o).unwrap();
        let d = r.samples[0].d_ps_nm_km.unwrap();
        assert!((d / d_true - 1.0).abs() < 1e-3, "{d}");
    }

    #[test]
    fn edge_visibility_is_flagged() {
        let det = DetectorModel::new(0.1, 1e4, 0);
        let at_edge = simulate_trace(1.0, 0.0, &DriftProcess::UniformRandomPhase, &det.with_seed(5), 500).unwrap();
        let mut traces: Vec<_> = (0..30).map(|i| trace(0.88, 100 + i, CountNoise::Poisson, 1000.0, 500)).collect();
        traces.push(at_edge);
        let r = method_inflexion(&traces, 4e11, 2.4, &passed(), &opts()).unwrap();
        assert_eq!(r.samples.len(), traces.len());
        for s in r.samples.iter().filter(|s| s.flag.is_some()) {
            assert_eq!(s.flag, Some(SampleFlag::AtDomainEdge));
            assert_eq!((s.gamma, s.d_ps_nm_km), (Some(0.0), Some(0.0)));
        }
        let FitDetails::Inflexion(details) = &r.fit_details else { panic!() };
        assert_eq!(details.n_used + details.n_flagged, traces.len());
    }

    #[test]
    fn multipoint_model_in_model() {
        let length = 4.5;
        let beta2 = 2.1976e-26;
        let sigmas: Vec<f64> = (1..=6).map(|k| k as f64 * 2e11).collect();
        let vis: Vec<f64> = sigmas.iter().map(|s| visibility_closed_form(2.0 * s * s * beta2 * length)).collect();
        let fit = fit_multipoint(&sigmas, &vis, &[1e-3; 6], length).unwrap();
        assert!((fit.beta2 / beta2 - 1.0).abs() < 1e-9, "{}", fit.beta2);
    }

    #[test]
    fn multipoint_needs_three_bandwidths() {
        let err = fit_multipoint(&[1e11, 2e11], &[0.99, 0.9], &[1e-3, 1e-3], 4.5).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let t = trace(0.9, 1, CountNoise::Poisson, 1000.0, 200);
        let points = vec![(1e11, vec![t.clone()]), (2e11, vec![t.clone()]), (2e11, vec![t])];
        assert!(matches!(method_multipoint(&points, 4.5, &passed(), &opts()), Err(Error::Config(_))));
    }

    #[test]
    fn gaussian_histogram_fit_recovers_moments() {
        let mut rng = crate::drift::rng_from_seed(9);
        let normal = rand_distr::Normal::new(17.0, 0.3).unwrap();
        let xs: Vec<f64> = (0..5000).map(|_| rand_distr::Distribution::sample(&normal, &mut rng)).collect();
        let g = fit_gaussian_histogram(&xs).unwrap();
        assert!((g.mean - 17.0).abs() < 0.03);
        assert!((g.sigma / 0.3 - 1.0).abs() < 0.08);
        assert!(fit_gaussian_histogram(&[]).is_err());
    }
}
