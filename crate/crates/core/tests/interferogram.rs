mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use common::{fresnel, rectangular_visibility_oracle, simpson};
use fringecd::gaussian::visibility_closed_form;
use fringecd::interferogram::{
    coincidence_interferogram, franson_visibility_phase, franson_visibility_phase_with, noon_phase, PhaseExpansion,
};
use fringecd::model::{DispersionProfile, SpectralDensity};
use proptest::prelude::*;

const LAMBDA0: f64 = 1560.46e-9;
const BETA2: f64 = 2.1976e-26;

#[test]
fn fresnel_oracle_reference_values() {
    let (c1, s1) = fresnel(1.0);
    assert_abs_diff_eq!(c1, 0.779_893_400_376_823, epsilon = 1e-13);
    assert_abs_diff_eq!(s1, 0.438_259_147_390_355, epsilon = 1e-13);
    let (c2, s2) = fresnel(2.0);
    assert_abs_diff_eq!(c2, 0.488_253_406_075_341, epsilon = 1e-13);
    assert_abs_diff_eq!(s2, 0.343_415_678_363_698, epsilon = 1e-13);
    let (cl, sl) = fresnel(1e4);
    assert_abs_diff_eq!(cl, 0.5, epsilon = 1e-4);
    assert_abs_diff_eq!(sl, 0.5, epsilon = 1e-4);
}

#[test]
fn fresnel_branches_agree_with_simpson() {
    for x in [0.3, 1.4, 1.6, 2.5, 4.0] {
        let c = simpson(|t| (0.5 * PI * t * t).cos(), 0.0, x, 20_000);
        let s = simpson(|t| (0.5 * PI * t * t).sin(), 0.0, x, 20_000);
        let (fc, fs) = fresnel(x);
        assert_abs_diff_eq!(fc, c, epsilon = 1e-11);
        assert_abs_diff_eq!(fs, s, epsilon = 1e-11);
    }
}

fn rectangular_quadrature(u: f64) -> f64 {
    let half_width = 1e12;
    // u = W·√(2β₂L/π)
    let length = PI * u * u / (2.0 * half_width * half_width * BETA2);
    let s = SpectralDensity::rectangular(half_width, LAMBDA0).unwrap();
    franson_visibility_phase(&s, BETA2, length).unwrap().visibility
}

#[test]
fn rectangular_matches_fresnel_oracle() {
    for i in 0..=98 {
        let u = 0.1 + 0.05 * i as f64;
        let v = rectangular_quadrature(u);
        assert!((v - rectangular_visibility_oracle(u)).abs() < 1e-6, "u = {u}: {v}");
    }
}

#[test]
fn rectangular_visibility_has_revival_structure() {
    // the flat-top curve is not monotone, unlike the Gaussian one
    let vs: Vec<f64> = (1..=50).map(|i| rectangular_quadrature(0.1 * i as f64)).collect();
    assert!(vs.windows(2).any(|w| w[1] > w[0]));
}

#[test]
fn tabulated_gaussian_close_to_analytic() {
    let sigma = 2e12;
    let pts: Vec<(f64, f64)> = (-800..=800)
        .map(|i| {
            let x = i as f64 * sigma / 100.0;
            (x, (-0.5 * (x / sigma).powi(2)).exp())
        })
        .collect();
    let tab = SpectralDensity::tabulated(&pts, LAMBDA0).unwrap();
    let exact = SpectralDensity::gaussian(sigma, LAMBDA0).unwrap();
    let length = 1.0 / (2.0 * sigma * sigma * BETA2);
    let a = franson_visibility_phase(&tab, BETA2, length).unwrap();
    let b = franson_visibility_phase(&exact, BETA2, length).unwrap();
    assert!((a.visibility - b.visibility).abs() < 1e-4);
    assert!((a.phase - b.phase).abs() < 1e-4);
}

#[test]
fn gaussian_hom_dip() {
    let sigma = 1.5e12;
    let s = SpectralDensity::gaussian(sigma, LAMBDA0).unwrap();
    for tau in [0.2e-12, 0.5e-12, 1.0e-12, 2.0e-12] {
        let beta1 = 4.9e-9;
        let p = DispersionProfile::new(tau / (2.0 * beta1), vec![0.0, beta1, 0.0]).unwrap();
        let d = coincidence_interferogram(&s, &p).unwrap();
        assert_abs_diff_eq!(d.hom_term, (-0.5 * sigma * sigma * tau * tau).exp(), epsilon = 1e-8);
    }
}

/// Franson quadratures from the full phase ψ(Ω) + ψ(−Ω), with ψ the Taylor
/// series of every order, integrated over the whole support.
fn full_phase_oracle(spectrum: &SpectralDensity, profile: &DispersionProfile) -> f64 {
    let psi = |w: f64| -> f64 {
        let mut fact = 1.0;
        let mut sum = 0.0;
        for (n, &b) in profile.betas().iter().enumerate().skip(1) {
            fact *= n as f64;
            sum += profile.length() * b * w.powi(n as i32) / fact;
        }
        sum
    };
    let edge = spectrum.support_half_width();
    let n = 400_000;
    let c = simpson(|w| spectrum.density(w) * (psi(w) + psi(-w)).cos(), -edge, edge, n);
    let s = simpson(|w| spectrum.density(w) * (psi(w) + psi(-w)).sin(), -edge, edge, n);
    (c * c + s * s).sqrt()
}

#[test]
fn odd_orders_cancel_against_full_phase_oracle() {
    let sigma = 3e12;
    let s = SpectralDensity::gaussian(sigma, LAMBDA0).unwrap();
    let length = 2.4;
    let base = DispersionProfile::new(length, vec![0.0, 0.0, BETA2, 0.0]).unwrap();
    let reference = franson_visibility_phase_with(&s, &base, PhaseExpansion::Extended).unwrap().visibility;
    for (b1, b3) in [(4.9e-12, 1e-43), (4.9e-10, 1e-41), (4.9e-9, 1e-40)] {
        let p = base.clone().with_beta(1, b1).with_beta(3, b3);
        let lib = franson_visibility_phase_with(&s, &p, PhaseExpansion::Extended).unwrap().visibility;
        assert!((lib - reference).abs() < 1e-10);
        assert!((full_phase_oracle(&s, &p) - lib).abs() < 1e-8, "β1 = {b1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_quadrature_matches_closed_form(gamma in 0.0f64..10.0) {
        let sigma = 2e12;
        let length = gamma / (2.0 * sigma * sigma * BETA2);
        prop_assume!(length > 0.0);
        let s = SpectralDensity::gaussian(sigma, LAMBDA0).unwrap();
        let vp = franson_visibility_phase(&s, BETA2, length).unwrap();
        prop_assert!((vp.visibility - visibility_closed_form(gamma)).abs() < 1e-8);
        prop_assert!((vp.phase - gamma.atan() / 2.0).abs() < 1e-8);
    }

    #[test]
    fn noon_phase_is_even_part(beta in prop::collection::vec(-1.0f64..1.0, 5), w in -2.0f64..2.0, l in 0.1f64..3.0) {
        let p = DispersionProfile::new(l, beta.clone()).unwrap();
        let psi = |x: f64| (0..beta.len()).map(|n| {
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            l * beta[n] * x.powi(n as i32) / fact
        }).sum::<f64>();
        prop_assert!((noon_phase(&p, w) - (psi(w) + psi(-w))).abs() < 1e-12);
    }

    #[test]
    fn coincidence_probability_is_a_probability(
        beta0 in -10.0f64..10.0,
        beta1 in 0.0f64..2e-9,
        gamma in 0.0f64..5.0,
    ) {
        let sigma = 1e12;
        let length = 1.0;
        let beta2 = gamma / (2.0 * sigma * sigma * length);
        let s = SpectralDensity::gaussian(sigma, LAMBDA0).unwrap();
        let p = DispersionProfile::new(length, vec![beta0, beta1, beta2]).unwrap();
        let d = coincidence_interferogram(&s, &p).unwrap();
        let pc = d.coincidence_probability();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&pc), "{pc}");
    }
}
