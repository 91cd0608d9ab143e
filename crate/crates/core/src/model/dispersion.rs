use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample length plus Taylor coefficients of the propagation constant about
/// the degeneracy frequency: `betas[n]` is β⁽ⁿ⁾ in sⁿ/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionProfile {
    length: f64,
    betas: Vec<f64>,
}

impl DispersionProfile {
    pub fn new(length: f64, betas: Vec<f64>) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain(format!("sample length must be positive, got {length}")));
        }
        if betas.len() < 3 {
            return Err(Error::domain("dispersion profile needs coefficients through order 2"));
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("non-finite dispersion coefficient"));
        }
        Ok(Self { length, betas })
    }

    /// Profile with only group-velocity dispersion.
    pub fn from_beta2(length: f64, beta2: f64) -> Result<Self> {
        Self::new(length, vec![0.0, 0.0, beta2])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// β⁽ⁿ⁾, zero for orders beyond the stored coefficients.
    pub fn beta(&self, order: usize) -> f64 {
        self.betas.get(order).copied().unwrap_or(0.0)
    }

    pub fn beta2(&self) -> f64 {
        self.beta(2)
    }

    pub fn with_beta(mut self, order: usize, value: f64) -> Self {
        if self.betas.len() <= order {
            self.betas.resize(order + 1, 0.0);
        }
        self.betas[order] = value;
        self
    }

    pub fn max_order(&self) -> usize {
        self.betas.len() - 1
    }
}

/// Interferometer operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub pump_wavelength: f64,
    pub degeneracy_wavelength: f64,
    pub sample: DispersionProfile,
    pub static_phase_offset: f64,
}

pub const DEFAULT_PUMP_WAVELENGTH: f64 = 780.23e-9;
pub const DEFAULT_DEGENERACY_WAVELENGTH: f64 = 1560.46e-9;

impl InterferometerConfig {
    pub fn new(
        pump_wavelength: f64,
        degeneracy_wavelength: f64,
        sample: DispersionProfile,
        static_phase_offset: f64,
    ) -> Result<Self> {
        if !(pump_wavelength > 0.0 && degeneracy_wavelength > 0.0) {
            return Err(Error::domain("wavelengths must be positive"));
        }
        let rel = (degeneracy_wavelength - 2.0 * pump_wavelength).abs() / degeneracy_wavelength;
        if rel > 1e-6 {
            return Err(Error::domain(format!(
                "degeneracy wavelength {degeneracy_wavelength} is not twice the pump wavelength {pump_wavelength}"
            )));
        }
        Ok(Self { pump_wavelength, degeneracy_wavelength, sample, static_phase_offset })
    }

    pub fn with_sample(sample: DispersionProfile) -> Self {
        Self {
            pump_wavelength: DEFAULT_PUMP_WAVELENGTH,
            degeneracy_wavelength: DEFAULT_DEGENERACY_WAVELENGTH,
            sample,
            static_phase_offset: 0.0,
        }
    }
}
