//! Synthetic free-running coincidence traces: a phase drift process, the
//! fringe projection and Poissonian detection.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_SCHEMA_VERSION: &str = "1";

/// Relative thermo-optic coefficient of fused silica, (Δn/n) per kelvin.
pub const SILICA_DN_DT_RELATIVE: f64 = 4.8e-6;
/// Group index of standard single-mode fiber near 1550 nm.
pub const SMF_GROUP_INDEX: f64 = 1.468;

/// splitmix64 finalizer; used to derive independent per-trace seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Temperature-to-phase conversion of a fiber arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    pub dn_dt_relative: f64,
    pub group_index: f64,
    /// Geometric factor between arm length and optical path change (2 for a
    /// double-pass Michelson arm).
    pub path_factor: f64,
}

impl Default for ThermalModel {
    fn default() -> Self {
        Self { dn_dt_relative: SILICA_DN_DT_RELATIVE, group_index: SMF_GROUP_INDEX, path_factor: 2.0 }
    }
}

impl ThermalModel {
    /// Temperature change that shifts the fringe by one period,
    /// λ/(path_factor·L·Δn-per-K) with Δn-per-K = (Δn/n)·n.
    pub fn fringe_period_kelvin(&self, length: f64, wavelength: f64) -> Result<f64> {
        if !(length > 0.0 && wavelength > 0.0) {
            return Err(Error::domain("length and wavelength must be positive"));
        }
        let dn_per_k = self.dn_dt_relative * self.group_index;
        Ok(wavelength / (self.path_factor * length * dn_per_k))
    }

    pub fn phase_per_kelvin(&self, length: f64, wavelength: f64) -> Result<f64> {
        Ok(2.0 * PI / self.fringe_period_kelvin(length, wavelength)?)
    }
}

/// Fringe phase sensitivity to temperature (rad/K) with the default fiber model.
pub fn phase_per_kelvin(length: f64, wavelength: f64) -> Result<f64> {
    ThermalModel::default().phase_per_kelvin(length, wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalComponent {
    pub amplitude_k: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftProcess {
    /// Independent φ ~ U[0, 2π) in every bin.
    UniformRandomPhase,
    /// Gaussian increments with the given std-dev per bin (rad).
    RandomWalk { step_std: f64 },
    /// φ(t) = sensitivity · Σ Aᵢ sin(2πfᵢt + pᵢ).
    ThermalSines { components: Vec<ThermalComponent>, sensitivity: f64 },
    /// φ(t) = rate · t.
    Linear { rate_rad_per_s: f64 },
}

impl DriftProcess {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriftProcess::UniformRandomPhase => Ok(()),
            DriftProcess::RandomWalk { step_std } => {
                if *step_std >= 0.0 && step_std.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("random-walk step must be non-negative, got {step_std}")))
                }
            }
            DriftProcess::ThermalSines { components, sensitivity } => {
                if !(*sensitivity > 0.0) {
                    return Err(Error::domain("thermal sensitivity must be positive"));
                }
                if components.iter().any(|c| !(c.frequency_hz > 0.0) || !c.amplitude_k.is_finite()) {
                    return Err(Error::domain("thermal components need positive frequencies"));
                }
                Ok(())
            }
            DriftProcess::Linear { rate_rad_per_s } => {
                if rate_rad_per_s.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("linear drift rate must be finite"))
                }
            }
        }
    }

    /// Phase of every bin, sampled at bin start times i·Δt.
    pub fn sample_phases<R: Rng>(&self, n_bins: usize, bin_duration: f64, rng: &mut R) -> Vec<f64> {
        match self {
            DriftProcess::UniformRandomPhase => (0..n_bins).map(|_| rng.random::<f64>() * 2.0 * PI).collect(),
            DriftProcess::RandomWalk { step_std } => {
                let step = Normal::new(0.0, *step_std).expect("validated step");
                let mut phi = 0.0;
                (0..n_bins)
                    .map(|i| {
                        if i > 0 {
                            phi += step.sample(rng);
                        }
                        phi
                    })
                    .collect()
            }
            DriftProcess::ThermalSines { components, sensitivity } => (0..n_bins)
                .map(|i| {
                    let t = i as f64 * bin_duration;
                    sensitivity
                        * components
                            .iter()
                            .map(|c| c.amplitude_k * (2.0 * PI * c.frequency_hz * t + c.phase_rad).sin())
                            .sum::<f64>()
                })
                .collect(),
            DriftProcess::Linear { rate_rad_per_s } => {
                (0..n_bins).map(|i| rate_rad_per_s * i as f64 * bin_duration).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountNoise {
    #[default]
    Poisson,
    /// Counts are the rounded mean; used for estimator checks.
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub bin_duration: f64,
    /// Coincidence rate at the fringe maximum, Hz.
    pub max_coincidence_rate: f64,
    pub accidental_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub noise: CountNoise,
}

impl DetectorModel {
    pub fn new(bin_duration: f64, max_coincidence_rate: f64, seed: u64) -> Self {
        Self { bin_duration, max_coincidence_rate, accidental_rate: 0.0, seed, noise: CountNoise::Poisson }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_duration > 0.0) {
            return Err(Error::domain("bin duration must be positive"));
        }
        if !(self.max_coincidence_rate >= 0.0 && self.accidental_rate >= 0.0) {
            return Err(Error::domain("rates must be non-negative"));
        }
        Ok(())
    }

    /// Mean counts per bin at the fringe maximum.
    pub fn mean_max_counts(&self) -> f64 {
        self.max_coincidence_rate * self.bin_duration
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub schema: String,
    pub visibility: f64,
    pub phi0: f64,
    pub n_bins: usize,
    pub drift: DriftProcess,
    pub detector: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceTrace {
    pub bin_duration: f64,
    pub counts: Vec<u64>,
    pub true_visibility: Option<f64>,
    pub metadata: Option<TraceMetadata>,
}

impl CoincidenceTrace {
    pub fn from_counts(bin_duration: f64, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("trace needs at least one bin"));
        }
        if !(bin_duration > 0.0) {
            return Err(Error::domain("bin duration must be positive"));
        }
        Ok(Self { bin_duration, counts, true_visibility: None, metadata: None })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).sum::<f64>() / self.counts.len() as f64
    }
}

/// Noiseless normalized fringe values (1 + V·cos(φ + φ₀))/2.
pub fn fringe_values(visibility: f64, phi0: f64, phases: &[f64]) -> Vec<f64> {
    phases.iter().map(|p| 0.5 * (1.0 + visibility * (p + phi0).cos())).collect()
}

fn check_visibility(visibility: f64) -> Result<()> {
    if (0.0..=1.0).contains(&visibility) {
        Ok(())
    } else {
        Err(Error::domain(format!("visibility must lie in [0, 1], got {visibility}")))
    }
}

/// Simulates `n_bins` bins of a free-running coincidence measurement. The
/// mean count in bin t is
/// `R_max·Δt·(1 + V·cos(φ(t) + φ₀))/(1 + V) + R_acc·Δt`.
pub fn simulate_trace(
    visibility: f64,
    phi0: f64,
    drift: &DriftProcess,
    detector: &DetectorModel,
    n_bins: usize,
) -> Result<CoincidenceTrace> {
    check_visibility(visibility)?;
    drift.validate()?;
    detector.validate()?;
    if n_bins == 0 {
        return Err(Error::domain("n_bins must be at least 1"));
    }
    let mut rng = rng_from_seed(detector.seed);
    let phases = drift.sample_phases(n_bins, detector.bin_duration, &mut rng);
    let peak = detector.mean_max_counts();
    let background = detector.accidental_rate * detector.bin_duration;
    let counts = phases
        .iter()
        .map(|p| {
            let mean = peak * (1.0 + visibility * (p + phi0).cos()) / (1.0 + visibility) + background;
            match detector.noise {
                CountNoise::Noiseless => mean.round() as u64,
                CountNoise::Poisson if mean > 0.0 => {
                    Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64
                }
                CountNoise::Poisson => 0,
            }
        })
        .collect();
    Ok(CoincidenceTrace {
        bin_duration: detector.bin_duration,
        counts,
        true_visibility: Some(visibility),
        metadata: Some(TraceMetadata {
            schema: TRACE_SCHEMA_VERSION.to_string(),
            visibility,
            phi0,
            n_bins,
            drift: drift.clone(),
            detector: *detector,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    /// Largest phase change expected within or between bins, rad.
    pub rad_per_bin: f64,
    pub threshold: f64,
    pub status: BandwidthStatus,
}

pub const DEFAULT_BANDWIDTH_THRESHOLD: f64 = PI / 10.0;

/// Compares the drift speed with the detection bandwidth. Thermal drift is
/// bounded analytically by sensitivity·Σ Aᵢ·2πfᵢ; a random walk is judged by
/// its per-bin step; the i.i.d. uniform model holds the phase fixed within a
/// bin.
pub fn drift_bandwidth_check(drift: &DriftProcess, detector: &DetectorModel, threshold: f64) -> BandwidthReport {
    let rad_per_bin = match drift {
        DriftProcess::UniformRandomPhase => 0.0,
        DriftProcess::RandomWalk { step_std } => *step_std,
        DriftProcess::ThermalSines { components, sensitivity } => {
            sensitivity
                * components.iter().map(|c| c.amplitude_k.abs() * 2.0 * PI * c.frequency_hz).sum::<f64>()
                * detector.bin_duration
        }
        DriftProcess::Linear { rate_rad_per_s } => rate_rad_per_s.abs() * detector.bin_duration,
    };
    let status = if rad_per_bin > threshold { BandwidthStatus::Warn } else { BandwidthStatus::Pass };
    BandwidthReport { rad_per_bin, threshold, status }
}
