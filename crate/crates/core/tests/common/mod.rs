#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

/// Fresnel integrals (C(x), S(x)) with the π t²/2 convention: power series
/// below |x| = 1.5, modified Lentz continued fraction for the complementary
/// error function above.
pub fn fresnel(x: f64) -> (f64, f64) {
    const EPS: f64 = 6e-16;
    const FPMIN: f64 = 1e-300;
    const XMIN: f64 = 1.5;
    let ax = x.abs();
    let (c, s) = if ax < FPMIN.sqrt() {
        (ax, 0.0)
    } else if ax <= XMIN {
        let fact = FRAC_PI_2 * ax * ax;
        let (mut sum, mut sums, mut sumc) = (0.0, 0.0, ax);
        let mut sign = 1.0;
        let mut odd = true;
        let mut term = ax;
        let mut n = 3.0;
        for k in 1..200 {
            term *= fact / k as f64;
            sum += sign * term / n;
            let test = sum.abs() * EPS;
            if odd {
                sign = -sign;
                sums = sum;
                sum = sumc;
            } else {
                sumc = sum;
                sum = sums;
            }
            if term < test {
                break;
            }
            odd = !odd;
            n += 2.0;
        }
        (sumc, sums)
    } else {
        let pix2 = PI * ax * ax;
        let mut b = Complex64::new(1.0, -pix2);
        let mut cc = Complex64::new(1.0 / FPMIN, 0.0);
        let mut d = b.inv();
        let mut h = d;
        let mut n = -1.0;
        for _ in 2..200 {
            n += 2.0;
            let a = -n * (n + 1.0);
            b += 4.0;
            d = (a * d + b).inv();
            cc = b + a / cc;
            let del = cc * d;
            h *= del;
            if (del.re - 1.0).abs() + del.im.abs() < EPS {
                break;
            }
        }
        h *= Complex64::new(ax, -ax);
        let cs = Complex64::new(0.5, 0.5) * (1.0 - Complex64::new((0.5 * pix2).cos(), (0.5 * pix2).sin()) * h);
        (cs.re, cs.im)
    };
    if x < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

/// Franson visibility of a flat-top spectrum as a function of
/// u = W·√(2β⁽²⁾L/π).
pub fn rectangular_visibility_oracle(u: f64) -> f64 {
    let (c, s) = fresnel(u);
    (c * c + s * s).sqrt() / u
}

/// Composite Simpson rule on [a, b] with n (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}
