//! Unit conversions between wavelength-domain and angular-frequency-domain
//! quantities. Everything inside the crate is SI; engineering units only
//! appear at the configuration boundary.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// 1 ps/(nm·km) expressed in s/m².
pub const PS_PER_NM_KM: f64 = 1e-12 / (1e-9 * 1e3);

/// FWHM of a Gaussian divided by its standard deviation, 2√(2 ln 2).
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Spectral width in wavelength to angular frequency, σ_ω = 2πc·σ_λ/λ₀².
pub fn sigma_lambda_to_omega(sigma_lambda: f64, center_wavelength: f64) -> Result<f64> {
    require_positive("sigma_lambda", sigma_lambda)?;
    require_positive("center_wavelength", center_wavelength)?;
    Ok(2.0 * PI * SPEED_OF_LIGHT * sigma_lambda / (center_wavelength * center_wavelength))
}

/// Inverse of [`sigma_lambda_to_omega`].
pub fn sigma_omega_to_lambda(sigma_omega: f64, center_wavelength: f64) -> Result<f64> {
    require_positive("sigma_omega", sigma_omega)?;
    require_positive("center_wavelength", center_wavelength)?;
    Ok(sigma_omega * center_wavelength * center_wavelength / (2.0 * PI * SPEED_OF_LIGHT))
}

/// Dispersion parameter D (s/m²) to group-velocity dispersion β⁽²⁾ (s²/m),
/// β⁽²⁾ = −D·λ²/(2πc).
pub fn dispersion_coeff_to_beta2(d: f64, wavelength: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    Ok(-d * wavelength * wavelength / (2.0 * PI * SPEED_OF_LIGHT))
}

/// Inverse of [`dispersion_coeff_to_beta2`], D = −2πc·β⁽²⁾/λ².
pub fn beta2_to_dispersion_coeff(beta2: f64, wavelength: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    Ok(-2.0 * PI * SPEED_OF_LIGHT * beta2 / (wavelength * wavelength))
}

pub fn ps_nm_km_to_si(d_ps_nm_km: f64) -> f64 {
    d_ps_nm_km * PS_PER_NM_KM
}

pub fn si_to_ps_nm_km(d_si: f64) -> f64 {
    d_si / PS_PER_NM_KM
}

/// Convenience wrapper taking D in ps/(nm·km).
pub fn d_ps_nm_km_to_beta2(d_ps_nm_km: f64, wavelength: f64) -> Result<f64> {
    dispersion_coeff_to_beta2(ps_nm_km_to_si(d_ps_nm_km), wavelength)
}

pub fn beta2_to_d_ps_nm_km(beta2: f64, wavelength: f64) -> Result<f64> {
    beta2_to_dispersion_coeff(beta2, wavelength).map(si_to_ps_nm_km)
}

/// How a filter width given in wavelength units should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthConvention {
    /// The value is the standard deviation of the intensity spectrum.
    Sigma,
    /// The value is the full width at half maximum of a Gaussian intensity spectrum.
    Fwhm,
}

impl WidthConvention {
    pub fn to_sigma(self, width: f64) -> f64 {
        match self {
            WidthConvention::Sigma => width,
            WidthConvention::Fwhm => width / GAUSSIAN_FWHM_PER_SIGMA,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn filter_width_to_angular() {
        // 2π·c·4.57e-9 / (1560.46e-9)²
        let w = sigma_lambda_to_omega(4.57e-9, 1560.46e-9).unwrap();
        assert_relative_eq!(w, 3.535_2e12, max_relative = 1e-4);
    }

    #[test]
    fn zero_width_rejected() {
        assert!(matches!(sigma_lambda_to_omega(0.0, 1560e-9), Err(Error::Domain(_))));
        assert!(sigma_lambda_to_omega(1e-9, -1.0).is_err());
    }

    #[test]
    fn smf28_dispersion() {
        let b2 = d_ps_nm_km_to_beta2(17.0, 1560.46e-9).unwrap();
        assert_relative_eq!(b2, -2.1976e-26, max_relative = 1e-3);
        assert_eq!(d_ps_nm_km_to_beta2(0.0, 1560.46e-9).unwrap(), 0.0);
        let d = beta2_to_d_ps_nm_km(-2.198e-26, 1560.46e-9).unwrap();
        assert_relative_eq!(d, 17.0, max_relative = 1e-3);
    }

    #[test]
    fn fwhm_convention() {
        assert_relative_eq!(WidthConvention::Fwhm.to_sigma(2.354_820_045), 1.0, max_relative = 1e-9);
        assert_eq!(WidthConvention::Sigma.to_sigma(3.0), 3.0);
    }

    proptest! {
        #[test]
        fn width_round_trip(s in 1e-12f64..1e-6, lam in 1e-7f64..1e-5) {
            let w = sigma_lambda_to_omega(s, lam).unwrap();
            let back = sigma_omega_to_lambda(w, lam).unwrap();
            prop_assert!(((back - s) / s).abs() < 1e-12);
        }

        #[test]
        fn dispersion_round_trip(d in -100.0f64..100.0, lam in 1e-7f64..1e-5) {
            prop_assume!(d.abs() > 1e-6);
            let b2 = d_ps_nm_km_to_beta2(d, lam).unwrap();
            let back = beta2_to_d_ps_nm_km(b2, lam).unwrap();
            prop_assert!(((back - d) / d).abs() < 1e-12);
        }
    }
}
