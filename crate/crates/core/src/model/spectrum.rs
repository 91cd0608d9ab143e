//! Biphoton intensity spectra |Γ(Δω)|² as a function of detuning from the
//! degeneracy frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the integration window for Gaussian spectra, in units of σ.
/// The mass outside ±8σ is erfc(8/√2) ≈ 1.2e-15.
pub const GAUSSIAN_TRUNCATION_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralShape {
    Gaussian { sigma_omega: f64 },
    Rectangular { half_width_omega: f64 },
    /// Piecewise-linear density through `(detuning, density)` nodes, zero
    /// outside the table. Always stored symmetric about zero.
    Tabulated { detuning: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    shape: SpectralShape,
    center_wavelength: f64,
    /// Multiplicative factor on the analytic shapes; 1 once normalized.
    scale: f64,
}

fn check_center(center_wavelength: f64) -> Result<()> {
    if center_wavelength > 0.0 && center_wavelength.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpectrum(format!(
            "center wavelength must be positive, got {center_wavelength}"
        )))
    }
}

impl SpectralDensity {
    pub fn gaussian(sigma_omega: f64, center_wavelength: f64) -> Result<Self> {
        check_center(center_wavelength)?;
        if !(sigma_omega > 0.0 && sigma_omega.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("gaussian width must be positive, got {sigma_omega}")));
        }
        Ok(Self { shape: SpectralShape::Gaussian { sigma_omega }, center_wavelength, scale: 1.0 })
    }

    pub fn rectangular(half_width_omega: f64, center_wavelength: f64) -> Result<Self> {
        check_center(center_wavelength)?;
        if !(half_width_omega > 0.0 && half_width_omega.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "rectangular half-width must be positive, got {half_width_omega}"
            )));
        }
        Ok(Self { shape: SpectralShape::Rectangular { half_width_omega }, center_wavelength, scale: 1.0 })
    }

    /// Builds a tabulated spectrum from `(detuning, density)` samples. The
    /// table is sorted, symmetrized about zero detuning and normalized.
    pub fn tabulated(points: &[(f64, f64)], center_wavelength: f64) -> Result<Self> {
        Self::tabulated_raw(points, center_wavelength)?.symmetrized().normalized()
    }

    /// Sorted table without symmetrization or normalization.
    pub fn tabulated_raw(points: &[(f64, f64)], center_wavelength: f64) -> Result<Self> {
        check_center(center_wavelength)?;
        if points.len() < 2 {
            return Err(Error::InvalidSpectrum("tabulated spectrum needs at least two points".into()));
        }
        let mut pts = points.to_vec();
        for &(x, y) in &pts {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidSpectrum("non-finite tabulated value".into()));
            }
            if y < 0.0 {
                return Err(Error::InvalidSpectrum(format!("negative density {y} at detuning {x}")));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSpectrum("duplicate detuning in table".into()));
        }
        let (detuning, density) = pts.into_iter().unzip();
        Ok(Self { shape: SpectralShape::Tabulated { detuning, density }, center_wavelength, scale: 1.0 })
    }

    pub fn shape(&self) -> &SpectralShape {
        &self.shape
    }

    pub fn center_wavelength(&self) -> f64 {
        self.center_wavelength
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out.shape {
            SpectralShape::Tabulated { density, .. } => density.iter_mut().for_each(|d| *d *= factor),
            _ => out.scale *= factor,
        }
        out
    }

    /// Density at a detuning (rad/s), in 1/(rad/s).
    pub fn density(&self, detuning: f64) -> f64 {
        match &self.shape {
            SpectralShape::Gaussian { sigma_omega } => {
                let z = detuning / sigma_omega;
                self.scale * (-0.5 * z * z).exp() / (sigma_omega * (2.0 * PI).sqrt())
            }
            SpectralShape::Rectangular { half_width_omega } => {
                if detuning.abs() <= *half_width_omega {
                    self.scale / (2.0 * half_width_omega)
                } else {
                    0.0
                }
            }
            SpectralShape::Tabulated { detuning: xs, density: ys } => interpolate(xs, ys, detuning),
        }
    }

    /// Total integral of the density.
    pub fn integral(&self) -> f64 {
        match &self.shape {
            SpectralShape::Gaussian { .. } | SpectralShape::Rectangular { .. } => self.scale,
            SpectralShape::Tabulated { detuning, density } => trapezoid(detuning, density),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let total = self.integral();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("density integrates to {total}")));
        }
        let mut out = self.clone();
        match &mut out.shape {
            SpectralShape::Tabulated { density, .. } => density.iter_mut().for_each(|d| *d /= total),
            _ => out.scale = 1.0,
        }
        Ok(out)
    }

    pub fn is_normalized(&self) -> bool {
        (self.integral() - 1.0).abs() <= 1e-9
    }

    /// Replaces the density by (ρ(Δω) + ρ(−Δω))/2. Analytic shapes are
    /// already symmetric and are returned unchanged.
    pub fn symmetrized(&self) -> Self {
        let SpectralShape::Tabulated { detuning, density } = &self.shape else {
            return self.clone();
        };
        let mut half: Vec<f64> = detuning.iter().map(|x| x.abs()).collect();
        half.push(0.0);
        half.sort_by(f64::total_cmp);
        half.dedup();
        let values: Vec<f64> = half
            .iter()
            .map(|&x| 0.5 * (interpolate(detuning, density, x) + interpolate(detuning, density, -x)))
            .collect();
        let mut xs: Vec<f64> = half.iter().skip(1).rev().map(|x| -x).collect();
        let mut ys: Vec<f64> = values.iter().skip(1).rev().copied().collect();
        xs.extend_from_slice(&half);
        ys.extend_from_slice(&values);
        Self {
            shape: SpectralShape::Tabulated { detuning: xs, density: ys },
            center_wavelength: self.center_wavelength,
            scale: self.scale,
        }
    }

    /// Detuning beyond which the density carries less than 1e-12 of the mass
    /// (or is identically zero).
    pub fn support_half_width(&self) -> f64 {
        match &self.shape {
            SpectralShape::Gaussian { sigma_omega } => GAUSSIAN_TRUNCATION_SIGMAS * sigma_omega,
            SpectralShape::Rectangular { half_width_omega } => *half_width_omega,
            SpectralShape::Tabulated { detuning, .. } => {
                detuning.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            }
        }
    }

    /// Points in (0, support) where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.shape {
            SpectralShape::Tabulated { detuning, .. } => {
                let edge = self.support_half_width();
                detuning.iter().copied().filter(|&x| x > 0.0 && x < edge).collect()
            }
            _ => Vec::new(),
        }
    }

    /// RMS detuning of the normalized density, the σ that enters γ = 2σ²β⁽²⁾L.
    pub fn rms_width(&self) -> f64 {
        match &self.shape {
            SpectralShape::Gaussian { sigma_omega } => *sigma_omega,
            SpectralShape::Rectangular { half_width_omega } => half_width_omega / 3f64.sqrt(),
            SpectralShape::Tabulated { detuning, density } => {
                // exact second moment of a piecewise-linear density
                let mut m2 = 0.0;
                for i in 0..detuning.len() - 1 {
                    let (a, b) = (detuning[i], detuning[i + 1]);
                    let (fa, fb) = (density[i], density[i + 1]);
                    let slope = (fb - fa) / (b - a);
                    let c0 = fa - slope * a;
                    m2 += c0 * (b.powi(3) - a.powi(3)) / 3.0 + slope * (b.powi(4) - a.powi(4)) / 4.0;
                }
                (m2 / self.integral()).sqrt()
            }
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(i) => {
            let (x0, x1) = (xs[i - 1], xs[i]);
            let t = (x - x0) / (x1 - x0);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}
