//! Campaign configuration: a strict TOML schema with units in key names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drift::{CountNoise, DetectorModel, DriftProcess};
use crate::error::{Error, Result};
use crate::estimate::{EstimatorConfig, PdfFitOptions};
use crate::model::units::{self, WidthConvention};
use crate::model::DEFAULT_DEGENERACY_WAVELENGTH;
use crate::pipeline::DEFAULT_CALIBRATION_THRESHOLD;

pub const CONFIG_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Estimate,
    MethodA,
    MethodB,
    TheoryCurves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema: String,
    pub mode: Mode,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physics: Option<PhysicsConfig>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default = "default_drift")]
    pub drift: DriftProcess,
    #[serde(default = "default_estimation")]
    pub estimation: EstimatorConfig,
    #[serde(default)]
    pub campaign: RepetitionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryConfig>,
}

fn default_drift() -> DriftProcess {
    DriftProcess::UniformRandomPhase
}

/// Campaigns use the Poisson-mixture likelihood; see README for why.
fn default_estimation() -> EstimatorConfig {
    EstimatorConfig::PdfFit(PdfFitOptions::poisson_ml())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "default_wavelength")]
    pub degeneracy_wavelength_m: f64,
    pub sample_length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion_ps_nm_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2_s2_per_m: Option<f64>,
    /// Required whenever filter widths are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_convention: Option<WidthConvention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_widths_nm: Option<Vec<f64>>,
    /// Method A alternative to `filter_widths_nm`: the bandwidth is chosen
    /// to place the sample at this γ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_gamma: Option<f64>,
}

fn default_wavelength() -> f64 {
    DEFAULT_DEGENERACY_WAVELENGTH
}

impl PhysicsConfig {
    /// |β⁽²⁾| in s²/m from whichever dispersion key is set.
    pub fn beta2(&self) -> Result<f64> {
        match (self.dispersion_ps_nm_km, self.beta2_s2_per_m) {
            (Some(d), None) => Ok(units::d_ps_nm_km_to_beta2(d, self.degeneracy_wavelength_m)?.abs()),
            (None, Some(b)) => Ok(b.abs()),
            (Some(_), Some(_)) => Err(Error::config("set only one of dispersion_ps_nm_km and beta2_s2_per_m")),
            (None, None) => Err(Error::config("physics needs dispersion_ps_nm_km or beta2_s2_per_m")),
        }
    }

    /// Filter widths converted to spectral σ_ω (rad/s).
    pub fn sigma_omegas(&self) -> Result<Vec<f64>> {
        let widths = self.filter_widths_nm.as_ref().ok_or_else(|| Error::config("filter_widths_nm is missing"))?;
        let convention = self
            .width_convention
            .ok_or_else(|| Error::config("width_convention (\"sigma\" or \"fwhm\") is required with filter_widths_nm"))?;
        widths
            .iter()
            .map(|&w| {
                if !(w > 0.0) {
                    return Err(Error::config(format!("filter widths must be positive, got {w}")));
                }
                units::sigma_lambda_to_omega(convention.to_sigma(w) * 1e-9, self.degeneracy_wavelength_m)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub bin_duration_s: f64,
    pub max_coincidence_rate_hz: f64,
    #[serde(default)]
    pub accidental_rate_hz: f64,
    #[serde(default)]
    pub noise: CountNoise,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { bin_duration_s: 0.1, max_coincidence_rate_hz: 1e4, accidental_rate_hz: 0.0, noise: CountNoise::Poisson }
    }
}

impl DetectorConfig {
    pub fn model(&self, seed: u64) -> DetectorModel {
        DetectorModel {
            bin_duration: self.bin_duration_s,
            max_coincidence_rate: self.max_coincidence_rate_hz,
            accidental_rate: self.accidental_rate_hz,
            seed,
            noise: self.noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepetitionConfig {
    /// Traces per operating point.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_bins")]
    pub bins_per_trace: usize,
    #[serde(default = "default_threshold")]
    pub calibration_threshold: f64,
    #[serde(default)]
    pub ignore_calibration: bool,
}

fn default_repetitions() -> usize {
    200
}

fn default_bins() -> usize {
    500
}

fn default_threshold() -> f64 {
    DEFAULT_CALIBRATION_THRESHOLD
}

impl Default for RepetitionConfig {
    fn default() -> Self {
        Self {
            repetitions: default_repetitions(),
            bins_per_trace: default_bins(),
            calibration_threshold: default_threshold(),
            ignore_calibration: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub visibility: f64,
    #[serde(default)]
    pub phi0_rad: f64,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub trace_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveShape {
    Gaussian,
    Rectangular,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub shape: CurveShape,
    pub gamma_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    241
}

impl CampaignConfig {
    /// A config for `mode` with every optional section absent.
    pub fn new(mode: Mode, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            schema: CONFIG_SCHEMA_VERSION.to_string(),
            mode,
            seed,
            output_dir: output_dir.into(),
            physics: None,
            detector: DetectorConfig::default(),
            drift: default_drift(),
            estimation: default_estimation(),
            campaign: RepetitionConfig::default(),
            simulate: None,
            estimate: None,
            theory: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn physics(&self) -> Result<&PhysicsConfig> {
        self.physics.as_ref().ok_or_else(|| Error::config(format!("mode {:?} needs a [physics] section", self.mode)))
    }

    /// Checks that every key the mode needs is present and in range.
    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema {:?}, expected {CONFIG_SCHEMA_VERSION:?}",
                self.schema
            )));
        }
        self.drift.validate().map_err(|e| Error::config(e.to_string()))?;
        self.detector.model(self.seed).validate().map_err(|e| Error::config(e.to_string()))?;
        let reps = &self.campaign;
        if reps.repetitions == 0 || reps.bins_per_trace == 0 {
            return Err(Error::config("repetitions and bins_per_trace must be positive"));
        }
        if !(reps.calibration_threshold > 0.0 && reps.calibration_threshold <= 1.0) {
            return Err(Error::config("calibration_threshold must lie in (0, 1]"));
        }
        if let Some(p) = &self.physics {
            if !(p.sample_length_m > 0.0 && p.degeneracy_wavelength_m > 0.0) {
                return Err(Error::config("sample_length_m and degeneracy_wavelength_m must be positive"));
            }
            if p.filter_widths_nm.is_some() {
                p.sigma_omegas()?;
            }
        }
        match self.mode {
            Mode::Simulate => {
                let s = self.simulate.ok_or_else(|| Error::config("mode simulate needs a [simulate] section"))?;
                if !(0.0..=1.0).contains(&s.visibility) || s.n_bins == 0 {
                    return Err(Error::config("simulate needs 0 ≤ visibility ≤ 1 and n_bins ≥ 1"));
                }
            }
            Mode::Estimate => {
                self.estimate.as_ref().ok_or_else(|| Error::config("mode estimate needs an [estimate] section"))?;
            }
            Mode::MethodA => {
                let p = self.physics()?;
                p.beta2()?;
                match (&p.filter_widths_nm, p.target_gamma) {
                    (Some(w), None) if w.len() == 1 => {}
                    (None, Some(g)) if g > 0.0 => {}
                    _ => {
                        return Err(Error::config(
                            "method-a needs exactly one of target_gamma > 0 or a single-entry filter_widths_nm",
                        ))
                    }
                }
            }
            Mode::MethodB => {
                let p = self.physics()?;
                p.beta2()?;
                let n = p.sigma_omegas()?.len();
                if n < crate::pipeline::MIN_BANDWIDTHS {
                    return Err(Error::config(format!(
                        "method-b needs ≥ {} filter widths, got {n}",
                        crate::pipeline::MIN_BANDWIDTHS
                    )));
                }
            }
            Mode::TheoryCurves => {
                let t = self.theory.ok_or_else(|| Error::config("mode theory-curves needs a [theory] section"))?;
                if !(t.gamma_max > 0.0) || t.points < 2 {
                    return Err(Error::config("theory needs gamma_max > 0 and points ≥ 2"));
                }
            }
        }
        Ok(())
    }
}
