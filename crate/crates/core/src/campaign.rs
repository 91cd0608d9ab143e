//! Runs a configured campaign end to end and writes its outputs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{derive_seed, drift_bandwidth_check, simulate_trace, BandwidthStatus, CoincidenceTrace};
use crate::drift::DEFAULT_BANDWIDTH_THRESHOLD;
use crate::error::{Error, Result};
use crate::estimate::{estimate, freedman_diaconis_bins, CountHistogram, EstimatorConfig};
use crate::gaussian::{inflexion_gamma, sigma_for_gamma, visibility_closed_form};
use crate::interferogram::franson_visibility_phase;
use crate::io::config::{CampaignConfig, CurveShape, Mode};
use crate::io::{emit_plot_data, read_trace, write_json, Curve, Manifest, PlotData};
use crate::model::{units, SpectralDensity};
use crate::pipeline::{self, CalibrationReport, CdResult, FitDetails, PipelineOptions};

/// Index reserved for the calibration trace's seed stream.
const CALIBRATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// Short machine-readable result for standard output.
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
}

pub fn run(config: &CampaignConfig) -> Result<RunOutcome> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut warnings = Vec::new();
    let (files, summary) = match config.mode {
        Mode::Simulate => run_simulate(config, dir, &mut warnings)?,
        Mode::Estimate => run_estimate(config, dir)?,
        Mode::MethodA => run_method_a(config, dir, &mut warnings)?,
        Mode::MethodB => run_method_b(config, dir, &mut warnings)?,
        Mode::TheoryCurves => run_theory(config, dir)?,
    };
    let manifest = Manifest::build(config, dir, &files)?;
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    Ok(RunOutcome { mode: config.mode, output_dir: dir.clone(), files, manifest: manifest_path, summary, warnings })
}

type ModeOutput = (Vec<PathBuf>, serde_json::Value);

fn check_drift(config: &CampaignConfig, warnings: &mut Vec<String>) {
    let report = drift_bandwidth_check(&config.drift, &config.detector.model(config.seed), DEFAULT_BANDWIDTH_THRESHOLD);
    if report.status == BandwidthStatus::Warn {
        warnings.push(format!(
            "phase drift of {:.3} rad per bin exceeds {:.3}; bins may average over the fringe",
            report.rad_per_bin, report.threshold
        ));
    }
}

fn run_simulate(config: &CampaignConfig, dir: &Path, warnings: &mut Vec<String>) -> Result<ModeOutput> {
    check_drift(config, warnings);
    let s = config.simulate.expect("validated");
    let det = config.detector.model(config.seed);
    let trace = simulate_trace(s.visibility, s.phi0_rad, &config.drift, &det, s.n_bins)?;
    let files = emit_plot_data(dir, "trace", &PlotData::FringeTrace(&trace))?;
    let summary = serde_json::json!({
        "schema": 1,
        "n_bins": trace.len(),
        "true_visibility": s.visibility,
        "mean_counts": trace.mean(),
    });
    Ok((files, summary))
}

fn histogram_with_fit(trace: &CoincidenceTrace, visibility: f64, scale: f64) -> (CountHistogram, Vec<f64>) {
    let mut sorted = trace.counts_f64();
    sorted.sort_by(f64::total_cmp);
    let hist = CountHistogram::build(&sorted, freedman_diaconis_bins(&sorted, 20));
    let fit = if visibility > 0.0 && scale > 0.0 {
        hist.arcsine_expectation(0.5 * scale * (1.0 - visibility), 0.5 * scale * (1.0 + visibility), sorted.len() as f64)
    } else {
        vec![0.0; hist.counts.len()]
    };
    (hist, fit)
}

fn run_estimate(config: &CampaignConfig, dir: &Path) -> Result<ModeOutput> {
    let path = &config.estimate.as_ref().expect("validated").trace_path;
    let trace = read_trace(path)?;
    let est = estimate(&trace, &config.estimation)?;
    let report = est.report();
    let report_path = dir.join("estimate.json");
    write_json(&report_path, &report)?;
    let (hist, fit) = histogram_with_fit(&trace, est.visibility, est.diagnostics.scale_estimate);
    let mut files = vec![report_path];
    files.extend(emit_plot_data(dir, "count-histogram", &PlotData::CountHistogram { histogram: &hist, fit: &fit })?);
    Ok((files, serde_json::to_value(&report)?))
}

fn pipeline_options(config: &CampaignConfig, wavelength: f64) -> PipelineOptions {
    let mut opts = PipelineOptions::new(config.estimation.clone(), wavelength);
    opts.ignore_calibration = config.campaign.ignore_calibration;
    opts
}

/// True visibility and fringe phase of a Gaussian spectrum of width σ_ω.
fn ground_truth(sigma_omega: f64, beta2: f64, length: f64, wavelength: f64) -> Result<(f64, f64)> {
    let spectrum = SpectralDensity::gaussian(sigma_omega, wavelength)?;
    let vp = franson_visibility_phase(&spectrum, beta2, length)?;
    Ok((vp.visibility, vp.phase))
}

fn simulate_batch(config: &CampaignConfig, visibility: f64, phi0: f64, stream: u64) -> Result<Vec<CoincidenceTrace>> {
    let base = derive_seed(config.seed, stream);
    (0..config.campaign.repetitions as u64)
        .into_par_iter()
        .map(|i| {
            let det = config.detector.model(derive_seed(base, i));
            simulate_trace(visibility, phi0, &config.drift, &det, config.campaign.bins_per_trace)
        })
        .collect()
}

fn calibration(config: &CampaignConfig, estimator: &EstimatorConfig) -> Result<CalibrationReport> {
    let det = config.detector.model(derive_seed(config.seed, CALIBRATION_STREAM));
    let trace = simulate_trace(1.0, 0.0, &config.drift, &det, config.campaign.bins_per_trace)?;
    pipeline::calibrate(&trace, estimator, config.campaign.calibration_threshold)
}

fn cd_summary(result: &CdResult) -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "method": result.method,
        "d_ps_nm_km": result.d_ps_nm_km,
        "std_error_ps_nm_km": result.std_error,
        "beta2_s2_per_m": result.beta2,
        "calibration_visibility": result.calibration.visibility,
    })
}

fn run_method_a(config: &CampaignConfig, dir: &Path, warnings: &mut Vec<String>) -> Result<ModeOutput> {
    check_drift(config, warnings);
    let physics = config.physics()?;
    let beta2 = physics.beta2()?;
    let length = physics.sample_length_m;
    let wavelength = physics.degeneracy_wavelength_m;
    let sigma = match physics.target_gamma {
        Some(g) => sigma_for_gamma(g, beta2, length)?,
        None => physics.sigma_omegas()?[0],
    };
    let (v_true, phi0) = ground_truth(sigma, beta2, length, wavelength)?;
    let opts = pipeline_options(config, wavelength);
    let cal = calibration(config, &opts.estimator)?;
    let traces = simulate_batch(config, v_true, phi0, 0)?;
    let result = pipeline::method_inflexion(&traces, sigma, length, &cal, &opts)?;
    let FitDetails::Inflexion(details) = &result.fit_details else { unreachable!("method A details") };
    if details.n_flagged > 0 {
        warnings.push(format!("{} repetitions at the visibility domain edge were excluded", details.n_flagged));
    }
    let result_path = dir.join("result.json");
    write_json(&result_path, &result)?;
    let mut files = vec![result_path];
    files.extend(emit_plot_data(dir, "cd-histogram", &PlotData::CdHistogram(&details.gaussian))?);
    let mut summary = cd_summary(&result);
    summary["true_visibility"] = v_true.into();
    Ok((files, summary))
}

fn run_method_b(config: &CampaignConfig, dir: &Path, warnings: &mut Vec<String>) -> Result<ModeOutput> {
    check_drift(config, warnings);
    let physics = config.physics()?;
    let beta2 = physics.beta2()?;
    let length = physics.sample_length_m;
    let wavelength = physics.degeneracy_wavelength_m;
    let opts = pipeline_options(config, wavelength);
    let cal = calibration(config, &opts.estimator)?;
    let mut points = Vec::new();
    for (k, sigma) in physics.sigma_omegas()?.into_iter().enumerate() {
        let (v_true, phi0) = ground_truth(sigma, beta2, length, wavelength)?;
        points.push((sigma, simulate_batch(config, v_true, phi0, k as u64)?));
    }
    let result = pipeline::method_multipoint(&points, length, &cal, &opts)?;
    let FitDetails::MultiPoint(details) = &result.fit_details else { unreachable!("method B details") };
    let result_path = dir.join("result.json");
    write_json(&result_path, &result)?;

    let top = details.points.iter().map(|p| p.sigma_omega).fold(0.0, f64::max) * 1.05;
    let sigma_grid: Vec<f64> = (1..=200).map(|i| top * i as f64 / 200.0).collect();
    let model = Curve {
        label: "fit".into(),
        x: sigma_grid
            .iter()
            .map(|&s| units::sigma_omega_to_lambda(s, wavelength).map(|l| l * 1e9))
            .collect::<Result<_>>()?,
        y: sigma_grid.iter().map(|&s| visibility_closed_form(2.0 * s * s * result.beta2 * length)).collect(),
    };
    let mut files = vec![result_path];
    files.extend(emit_plot_data(
        dir,
        "visibility-vs-bandwidth",
        &PlotData::VisibilityVsBandwidth { points: &details.points, model: &model },
    )?);
    Ok((files, cd_summary(&result)))
}

/// Visibility of a flat-top spectrum with the same rms width as a Gaussian
/// at dispersion parameter γ.
fn rectangular_visibility(gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let half_width = 1e12;
    let beta2 = 2e-26;
    let sigma = half_width / 3f64.sqrt();
    let length = gamma / (2.0 * sigma * sigma * beta2);
    let spectrum = SpectralDensity::rectangular(half_width, crate::model::DEFAULT_DEGENERACY_WAVELENGTH)?;
    Ok(franson_visibility_phase(&spectrum, beta2, length)?.visibility)
}

fn run_theory(config: &CampaignConfig, dir: &Path) -> Result<ModeOutput> {
    let t = config.theory.expect("validated");
    let gammas: Vec<f64> = (0..t.points).map(|i| t.gamma_max * i as f64 / (t.points - 1) as f64).collect();
    let mut curves = Vec::new();
    if matches!(t.shape, CurveShape::Gaussian | CurveShape::Both) {
        let y = gammas.iter().map(|&g| visibility_closed_form(g)).collect();
        curves.push(Curve { label: "gaussian".into(), x: gammas.clone(), y });
    }
    if matches!(t.shape, CurveShape::Rectangular | CurveShape::Both) {
        let y = gammas.par_iter().map(|&g| rectangular_visibility(g)).collect::<Result<Vec<_>>>()?;
        curves.push(Curve { label: "rectangular".into(), x: gammas.clone(), y });
    }
    if curves.is_empty() {
        return Err(Error::config("no curve selected"));
    }
    let g0 = inflexion_gamma();
    let marker = (t.gamma_max >= g0 && t.shape != CurveShape::Rectangular).then(|| (g0, visibility_closed_form(g0)));
    let files = emit_plot_data(dir, "gamma-curve", &PlotData::GammaCurve { curves: &curves, marker })?;
    let summary = serde_json::json!({
        "schema": 1,
        "inflexion_gamma": g0,
        "inflexion_visibility": visibility_closed_form(g0),
        "curves": curves.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
    });
    let info_path = dir.join("gamma-curve-inflexion.json");
    write_json(&info_path, &summary)?;
    let mut all = files;
    all.push(info_path);
    Ok((all, summary))
}
