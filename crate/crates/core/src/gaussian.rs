//! Closed-form results for a Gaussian biphoton spectrum.
//!
//! With γ = 2σ²β⁽²⁾L the Franson visibility is V(γ) = (γ² + 1)^(−1/4). Its
//! slope is steepest where d²V/dγ² = (3γ² − 2)/(4(γ² + 1)^(9/4)) vanishes,
//! at γ = √(2/3).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::units;

/// Dimensionless dispersion parameter together with the quantities it was
/// built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParameter {
    pub value: f64,
    pub sigma_omega: f64,
    pub beta2: f64,
    pub length: f64,
}

impl GammaParameter {
    pub fn new(sigma_omega: f64, beta2: f64, length: f64) -> Self {
        Self { value: 2.0 * sigma_omega * sigma_omega * beta2 * length, sigma_omega, beta2, length }
    }
}

pub fn visibility_closed_form(gamma: f64) -> f64 {
    (gamma * gamma + 1.0).powf(-0.25)
}

/// d²V/dγ².
pub fn visibility_second_derivative(gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    (3.0 * g2 - 2.0) / (4.0 * (g2 + 1.0).powf(2.25))
}

/// γ at which the visibility curve has its inflexion, √(2/3).
pub fn inflexion_gamma() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

/// |γ| recovered from a visibility, with the local condition number |dγ/dV|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// |dγ/dV| = 2V⁻⁵/√(V⁻⁴ − 1); infinite at V = 1.
    pub condition: f64,
}

pub fn invert_visibility(visibility: f64) -> Result<GammaEstimate> {
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(Error::domain(format!("visibility must lie in (0, 1], got {visibility}")));
    }
    // V⁻⁴ − 1 via expm1 keeps precision as V → 1
    let gamma = (-4.0 * visibility.ln()).exp_m1().max(0.0).sqrt();
    let condition = if gamma > 0.0 { 2.0 * visibility.powi(-5) / gamma } else { f64::INFINITY };
    Ok(GammaEstimate { gamma, condition })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdValue {
    /// |β⁽²⁾| in s²/m.
    pub beta2: f64,
    /// |D| in ps/(nm·km).
    pub d_ps_nm_km: f64,
}

/// |β⁽²⁾| = γ/(2σ²L) and the matching |D| at the given wavelength.
pub fn cd_from_gamma(gamma: f64, sigma_omega: f64, length: f64, wavelength: f64) -> Result<CdValue> {
    if !(sigma_omega > 0.0 && length > 0.0) {
        return Err(Error::domain("sigma_omega and length must be positive"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    let beta2 = gamma / (2.0 * sigma_omega * sigma_omega * length);
    let d = units::beta2_to_d_ps_nm_km(beta2, wavelength)?.abs();
    Ok(CdValue { beta2, d_ps_nm_km: d })
}

/// Spectral width σ_ω that places a sample with |β⁽²⁾| and length L at the
/// requested γ.
pub fn sigma_for_gamma(gamma: f64, beta2: f64, length: f64) -> Result<f64> {
    if !(gamma > 0.0 && beta2 != 0.0 && length > 0.0) {
        return Err(Error::domain("gamma, beta2 and length must be non-zero and positive"));
    }
    Ok((gamma / (2.0 * beta2.abs() * length)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const LAMBDA0: f64 = 1560.46e-9;

    #[test]
    fn closed_form_values() {
        assert_eq!(visibility_closed_form(0.0), 1.0);
        assert_abs_diff_eq!(visibility_closed_form(1.0), 0.840_896_415, epsilon = 1e-9);
        assert_abs_diff_eq!(visibility_closed_form(inflexion_gamma()), 0.880_112, epsilon = 1e-6);
        assert_eq!(visibility_closed_form(-2.5), visibility_closed_form(2.5));
    }

    #[test]
    fn inversion_values() {
        assert_eq!(invert_visibility(1.0).unwrap().gamma, 0.0);
        assert_abs_diff_eq!(invert_visibility(2f64.powf(-0.25)).unwrap().gamma, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(invert_visibility(0.8801).unwrap().gamma, 0.8165, epsilon = 2e-4);
        assert!(invert_visibility(0.0).is_err());
        assert!(invert_visibility(1.0001).is_err());
    }

    #[test]
    fn condition_number_diverges_at_unit_visibility() {
        assert!(invert_visibility(1.0).unwrap().condition.is_infinite());
        let v = 0.88;
        let h = 1e-6;
        let fd = (invert_visibility(v + h).unwrap().gamma - invert_visibility(v - h).unwrap().gamma) / (2.0 * h);
        assert_abs_diff_eq!(invert_visibility(v).unwrap().condition, fd.abs(), epsilon = 1e-5);
    }

    #[test]
    fn inflexion_root_by_finite_differences() {
        let h = 1e-4;
        let d2 = |g: f64| {
            (visibility_closed_form(g + h) - 2.0 * visibility_closed_form(g) + visibility_closed_form(g - h)) / (h * h)
        };
        // bisection on the sign change of the numeric second derivative
        let (mut lo, mut hi) = (0.5, 1.2);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if d2(lo) * d2(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_abs_diff_eq!(0.5 * (lo + hi), 0.816_497, epsilon = 1e-6);
    }

    #[test]
    fn second_derivative_expression() {
        let h = 1e-4;
        for i in 0..=50 {
            let g = 0.1 * i as f64;
            let fd = (visibility_closed_form(g + h) - 2.0 * visibility_closed_form(g) + visibility_closed_form(g - h))
                / (h * h);
            assert_abs_diff_eq!(visibility_second_derivative(g), fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn cd_recovery() {
        let beta2 = 2.198e-26;
        let length = 2.4;
        let sigma = sigma_for_gamma(inflexion_gamma(), beta2, length).unwrap();
        let cd = cd_from_gamma(inflexion_gamma(), sigma, length, LAMBDA0).unwrap();
        assert_abs_diff_eq!(cd.beta2, beta2, epsilon = 1e-38);
        assert_abs_diff_eq!(cd.d_ps_nm_km, 17.0, epsilon = 0.01);
        assert_abs_diff_eq!(GammaParameter::new(sigma, cd.beta2, length).value, inflexion_gamma(), epsilon = 1e-12);
        assert_eq!(cd_from_gamma(0.0, sigma, length, LAMBDA0).unwrap().beta2, 0.0);
        let doubled = cd_from_gamma(inflexion_gamma(), sigma, 2.0 * length, LAMBDA0).unwrap();
        assert_abs_diff_eq!(doubled.beta2, beta2 / 2.0, epsilon = 1e-38);
        assert!(cd_from_gamma(1.0, 0.0, length, LAMBDA0).is_err());
    }

    proptest! {
        // Below γ ≈ 1e-2 the rounding of V itself (δγ ≈ 2ε/γ) exceeds 1e-12.
        #[test]
        fn gamma_round_trip(g in 1e-2f64..100.0) {
            let back = invert_visibility(visibility_closed_form(g)).unwrap().gamma;
            prop_assert!((back - g).abs() <= 1e-12, "{} -> {}", g, back);
        }
    }
}
