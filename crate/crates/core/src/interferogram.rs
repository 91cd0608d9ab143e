//! Coincidence interferogram of a photon pair sent through an unbalanced
//! interferometer with a dispersive sample in one arm.
//!
//! With Ω the detuning from degeneracy and Ψ(Ω) the differential phase of
//! the two arms, the coincidence probability splits into
//!
//! ```text
//! P_c = ¼ { 2 − ∫ρ(Ω) cos[Ψ(Ω) + Ψ(−Ω)] dΩ − ∫ρ(Ω) cos[Ψ(Ω) − Ψ(−Ω)] dΩ }
//! ```
//!
//! The even part of Ψ drives the Franson oscillation, whose contrast and
//! phase are `V_D = |∫ρ e^{iβ⁽²⁾Ω²L}|` and `ψ_D = arg ∫ρ e^{iβ⁽²⁾Ω²L}`. The
//! odd part gives the HOM-like autocorrelation term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DispersionProfile, SpectralDensity};
use crate::quadrature::{integrate_partitioned, QuadratureOptions};

/// Per-integral absolute tolerance.
pub const QUADRATURE_ABS_TOL: f64 = 1e-10;

const PHASE_SCAN_POINTS: usize = 4096;
const MAX_PHASE_SCAN_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPhase {
    pub visibility: f64,
    /// Reduced to (−π, π].
    pub phase: f64,
}

impl VisibilityPhase {
    fn from_quadratures(c: f64, s: f64) -> Self {
        let mut phase = s.atan2(c);
        if phase <= -PI {
            phase += 2.0 * PI;
        }
        // Cauchy–Schwarz bounds the modulus by 1; clip rounding excess
        Self { visibility: c.hypot(s).min(1.0), phase }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferogramDecomposition {
    pub constant_term: f64,
    pub franson_term: VisibilityPhase,
    /// Static Franson phase 2β⁽⁰⁾L.
    pub franson_offset: f64,
    pub hom_term: f64,
}

impl InterferogramDecomposition {
    /// Coincidence probability ½ − ¼·V_D·cos(2β⁽⁰⁾L + ψ_D) − ¼·HOM.
    pub fn coincidence_probability(&self) -> f64 {
        let f = self.franson_term.visibility * (self.franson_offset + self.franson_term.phase).cos();
        self.constant_term - 0.25 * f - 0.25 * self.hom_term
    }
}

/// Which even orders of the propagation constant enter the Franson phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseExpansion {
    /// β⁽²⁾ only.
    #[default]
    Truncated,
    /// Every even order present in the profile.
    Extended,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Even part Ψ(Ω) + Ψ(−Ω) without the constant 2β⁽⁰⁾L term.
fn even_phase(profile: &DispersionProfile, expansion: PhaseExpansion, detuning: f64) -> f64 {
    let top = match expansion {
        PhaseExpansion::Truncated => 2,
        PhaseExpansion::Extended => profile.max_order(),
    };
    let l = profile.length();
    (2..=top)
        .step_by(2)
        .map(|n| 2.0 * l * profile.beta(n) * detuning.powi(n as i32) / factorial(n))
        .sum()
}

/// Odd part Ψ(Ω) − Ψ(−Ω).
fn odd_phase(profile: &DispersionProfile, detuning: f64) -> f64 {
    let l = profile.length();
    (1..=profile.max_order())
        .step_by(2)
        .map(|n| 2.0 * l * profile.beta(n) * detuning.powi(n as i32) / factorial(n))
        .sum()
}

/// Phase accumulated by the two-photon N00N state at a given detuning:
/// 2β⁽⁰⁾L plus the even-order terms 2L·β⁽²ᵏ⁾Δω²ᵏ/(2k)!. Odd orders cancel.
pub fn noon_phase(profile: &DispersionProfile, detuning: f64) -> f64 {
    2.0 * profile.length() * profile.beta(0) + even_phase(profile, PhaseExpansion::Extended, detuning)
}

/// Initial partition of [0, edge]: spectral kinks plus every point where the
/// phase crosses a multiple of π.
fn partition<P: Fn(f64) -> f64>(spectrum: &SpectralDensity, phase: P) -> Vec<f64> {
    let edge = spectrum.support_half_width();
    let mut points = vec![0.0, edge];
    points.extend(spectrum.kinks());
    // refine the scan so that each step moves the phase by well under π
    let excursion = (0..=PHASE_SCAN_POINTS)
        .map(|i| phase(edge * i as f64 / PHASE_SCAN_POINTS as f64).abs())
        .fold(0.0, f64::max);
    let scan = ((8.0 * excursion / PI).ceil() as usize).clamp(PHASE_SCAN_POINTS, MAX_PHASE_SCAN_POINTS);
    let mut last = (phase(0.0) / PI).floor();
    for i in 1..scan {
        let x = edge * i as f64 / scan as f64;
        let k = (phase(x) / PI).floor();
        if k != last {
            points.push(x);
            last = k;
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// 2∫₀^edge ρ(Ω)·g(Ω) dΩ for an even integrand.
fn symmetric_integral<G: Fn(f64) -> f64>(spectrum: &SpectralDensity, points: &[f64], g: G) -> Result<f64> {
    let opts = QuadratureOptions { abs_tol: 0.5 * QUADRATURE_ABS_TOL, ..Default::default() };
    let r = integrate_partitioned(|x| spectrum.density(x) * g(x), points, &opts)?;
    Ok(2.0 * r.value)
}

fn require_normalized(spectrum: &SpectralDensity) -> Result<()> {
    if spectrum.is_normalized() {
        Ok(())
    } else {
        Err(Error::InvalidSpectrum(format!(
            "spectrum must be normalized (integral {})",
            spectrum.integral()
        )))
    }
}

/// Franson-oscillation visibility and phase for group-velocity dispersion β⁽²⁾
/// over a sample of the given length.
pub fn franson_visibility_phase(spectrum: &SpectralDensity, beta2: f64, length: f64) -> Result<VisibilityPhase> {
    let profile = DispersionProfile::from_beta2(length, beta2)?;
    franson_visibility_phase_with(spectrum, &profile, PhaseExpansion::Truncated)
}

pub fn franson_visibility_phase_with(
    spectrum: &SpectralDensity,
    profile: &DispersionProfile,
    expansion: PhaseExpansion,
) -> Result<VisibilityPhase> {
    require_normalized(spectrum)?;
    let phase = |x: f64| even_phase(profile, expansion, x);
    let dispersive = match expansion {
        PhaseExpansion::Truncated => profile.beta2() != 0.0,
        PhaseExpansion::Extended => profile.betas().iter().skip(2).step_by(2).any(|&b| b != 0.0),
    };
    if !dispersive {
        return Ok(VisibilityPhase { visibility: 1.0, phase: 0.0 });
    }
    let points = partition(spectrum, |x| phase(x).abs());
    let c = symmetric_integral(spectrum, &points, |x| phase(x).cos())?;
    let s = symmetric_integral(spectrum, &points, |x| phase(x).sin())?;
    Ok(VisibilityPhase::from_quadratures(c, s))
}

/// Full decomposition of the coincidence interferogram.
pub fn coincidence_interferogram(
    spectrum: &SpectralDensity,
    profile: &DispersionProfile,
) -> Result<InterferogramDecomposition> {
    let franson_term = franson_visibility_phase_with(spectrum, profile, PhaseExpansion::Truncated)?;
    let odd = |x: f64| odd_phase(profile, x);
    let hom_term = if (1..=profile.max_order()).step_by(2).all(|n| profile.beta(n) == 0.0) {
        spectrum.integral()
    } else {
        let points = partition(spectrum, |x| odd(x).abs());
        symmetric_integral(spectrum, &points, |x| odd(x).cos())?
    };
    Ok(InterferogramDecomposition {
        constant_term: 0.5,
        franson_term,
        franson_offset: 2.0 * profile.beta(0) * profile.length(),
        hom_term,
    })
}
