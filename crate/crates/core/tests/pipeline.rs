use std::f64::consts::PI;

use fringecd::drift::{derive_seed, simulate_trace, CoincidenceTrace, DetectorModel, DriftProcess};
use fringecd::estimate::{EstimatorConfig, PdfFitOptions};
use fringecd::gaussian::{inflexion_gamma, visibility_closed_form};
use fringecd::pipeline::{
    calibrate, fit_multipoint, method_inflexion, method_multipoint, CdMethod, FitDetails, PipelineOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LAMBDA0: f64 = 1560.46e-9;
const C: f64 = 299_792_458.0;

/// |β⁽²⁾| for D in ps/(nm·km); 1 ps/(nm·km) = 1e-6 s/m².
fn beta2_oracle(d: f64) -> f64 {
    d * 1e-6 * LAMBDA0 * LAMBDA0 / (2.0 * PI * C)
}

fn sigma_omega_fwhm_nm(fwhm_nm: f64) -> f64 {
    let sigma_nm = fwhm_nm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    2.0 * PI * C * sigma_nm * 1e-9 / (LAMBDA0 * LAMBDA0)
}

fn traces(v: f64, n: usize, stream: u64) -> Vec<CoincidenceTrace> {
    (0..n as u64)
        .map(|i| {
            let det = DetectorModel::new(0.1, 1e4, derive_seed(stream, i));
            simulate_trace(v, 0.0, &DriftProcess::UniformRandomPhase, &det, 500).unwrap()
        })
        .collect()
}

fn passed_calibration(est: &EstimatorConfig) -> fringecd::pipeline::CalibrationReport {
    let det = DetectorModel::new(0.1, 1e4, 1);
    let t = simulate_trace(1.0, 0.0, &DriftProcess::UniformRandomPhase, &det, 500).unwrap();
    let cal = calibrate(&t, est, 0.99).unwrap();
    assert!(cal.passed, "{cal:?}");
    cal
}

#[test]
fn inflexion_result_is_self_consistent() {
    let est = EstimatorConfig::PdfFit(PdfFitOptions::poisson_ml());
    let opts = PipelineOptions::new(est.clone(), LAMBDA0);
    let (length, beta2) = (2.4, beta2_oracle(17.0));
    let sigma = (inflexion_gamma() / (2.0 * beta2 * length)).sqrt();
    let ts = traces(visibility_closed_form(inflexion_gamma()), 60, 7);
    let r = method_inflexion(&ts, sigma, length, &passed_calibration(&est), &opts).unwrap();
    assert_eq!(r.method, CdMethod::InflexionPoint);
    assert_eq!(r.samples.len(), 60);
    assert!((r.beta2 / beta2_oracle(r.d_ps_nm_km) - 1.0).abs() < 1e-9);
    assert!((r.d_ps_nm_km / 17.0 - 1.0).abs() < 0.05, "{}", r.d_ps_nm_km);
    let FitDetails::Inflexion(d) = &r.fit_details else { panic!("wrong details") };
    assert_eq!(d.n_used + d.n_flagged, 60);
    assert!((d.gaussian.mean - d.sample_mean).abs() < 3.0 * d.std_error_of_mean + 0.05 * d.sample_std);
}

#[test]
fn failed_calibration_blocks_methods() {
    let est = EstimatorConfig::PdfFit(PdfFitOptions::default());
    let det = DetectorModel::new(0.1, 1e4, 2);
    let t = simulate_trace(0.95, 0.0, &DriftProcess::UniformRandomPhase, &det, 500).unwrap();
    let cal = calibrate(&t, &est, 0.99).unwrap();
    assert!(!cal.passed);
    let mut opts = PipelineOptions::new(est.clone(), LAMBDA0);
    let ts = traces(0.88, 5, 3);
    assert!(method_inflexion(&ts, 3e12, 2.4, &cal, &opts).is_err());
    opts.ignore_calibration = true;
    assert!(method_inflexion(&ts, 3e12, 2.4, &cal, &opts).is_ok());
    assert!(calibrate(&t, &est, 0.94).unwrap().passed);
}

#[test]
fn multipoint_residuals_are_unbiased() {
    let (length, beta2) = (4.5, beta2_oracle(17.0));
    let sigmas: Vec<f64> = (0..40).map(|k| sigma_omega_fwhm_nm(0.5 + 0.25 * k as f64)).collect();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let se: Vec<f64> = sigmas.iter().map(|_| 2e-3).collect();
        let v: Vec<f64> = sigmas
            .iter()
            .map(|s| {
                let truth = visibility_closed_form(2.0 * s * s * beta2 * length);
                truth + Normal::new(0.0, 2e-3).unwrap().sample(&mut rng)
            })
            .collect();
        let fit = fit_multipoint(&sigmas, &v, &se, length).unwrap();
        let n = fit.residuals.len() as f64;
        let mean = fit.residuals.iter().sum::<f64>() / n;
        let sd = (fit.residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.5 * sd, "seed {seed}: mean {mean}, sd {sd}");
        assert!((fit.beta2 / beta2 - 1.0).abs() < 5.0 * fit.beta2_std_error / beta2);
    }
}

#[test]
fn constant_count_rate_gives_constant_visibility_errors() {
    // the pump power follows the filter so the peak count rate is the same at
    // every width; the left-histogram fit keeps its spread below V ≈ 0.9
    let est = EstimatorConfig::PdfFit(PdfFitOptions::default());
    let opts = PipelineOptions::new(est.clone(), LAMBDA0);
    let (length, beta2) = (4.5, beta2_oracle(17.0));
    let points: Vec<(f64, Vec<CoincidenceTrace>)> = (0..8)
        .map(|k| {
            let s = sigma_omega_fwhm_nm(0.1 + k as f64 * (10.0 - 0.1) / 7.0);
            let v = visibility_closed_form(2.0 * s * s * beta2 * length);
            (s, traces(v, 200, 100 + k))
        })
        .collect();
    let r = method_multipoint(&points, length, &passed_calibration(&est), &opts).unwrap();
    assert_eq!(r.method, CdMethod::MultiPoint);
    assert_eq!(r.samples.len(), 8 * 200);
    assert!((r.beta2 / beta2_oracle(r.d_ps_nm_km) - 1.0).abs() < 1e-9);
    let FitDetails::MultiPoint(d) = &r.fit_details else { panic!("wrong details") };
    let se: Vec<f64> = d.points.iter().filter(|p| p.model_visibility <= 0.9).map(|p| p.std_error).collect();
    assert!(se.len() >= 4, "{} points below V = 0.9", se.len());
    let (lo, hi) = se.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo <= 1.3, "{se:?}");
}
