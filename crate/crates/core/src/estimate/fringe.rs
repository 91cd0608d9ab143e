use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{EstimationMethod, VisibilityEstimate};
use crate::drift::CoincidenceTrace;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeFitOptions {
    /// Half-open bin range; the whole trace when absent.
    pub window: Option<(usize, usize)>,
}

const ZERO_PAD: usize = 16;

/// Dominant angular frequency (rad/bin), amplitude and phase of a
/// mean-subtracted series from a zero-padded FFT with parabolic peak
/// interpolation.
fn spectral_guess(y: &[f64]) -> (f64, f64, f64) {
    let n = y.len();
    let nfft = (n * ZERO_PAD).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(nfft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let half = nfft / 2;
    let (k, _) = buf[1..half]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm()))
        .fold((1, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mut kf = k as f64;
    if k > 1 && k + 1 < half {
        let (a, b, c) = (buf[k - 1].norm(), buf[k].norm(), buf[k + 1].norm());
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            kf += 0.5 * (a - c) / denom;
        }
    }
    let omega = 2.0 * PI * kf / nfft as f64;
    // the forward FFT uses e^{−iωt}, so arg X = φ₀ for cos(ωt + φ₀)
    (omega, 2.0 * buf[k].norm() / n as f64, buf[k].arg())
}

/// Least-squares fit of counts to A·(1 + V·cos(ωt + φ₀)) over a window
/// containing at least one full oscillation. t is the bin index.
pub fn estimate_fringefit(trace: &CoincidenceTrace, opts: &FringeFitOptions) -> Result<VisibilityEstimate> {
    let (start, end) = opts.window.unwrap_or((0, trace.len()));
    if start >= end || end > trace.len() {
        return Err(Error::domain(format!("invalid window {start}..{end} for {} bins", trace.len())));
    }
    let y: Vec<f64> = trace.counts[start..end].iter().map(|&c| c as f64).collect();
    let n = y.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("fringe fit needs ≥ 8 bins, got {n}")));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    if mean <= 0.0 {
        return Err(Error::DegenerateTrace("window holds no counts".into()));
    }
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let (omega0, amp0, phase0) = spectral_guess(&centered);
    let span = (n - 1) as f64;
    if omega0 * span < 2.0 * PI {
        return Err(Error::InsufficientData("window holds less than one oscillation".into()));
    }

    let residuals = |p: &[f64], out: &mut [f64]| {
        for (t, (o, yv)) in out.iter_mut().zip(&y).enumerate() {
            *o = p[0] * (1.0 + p[1] * (p[2] * t as f64 + p[3]).cos()) - yv;
        }
    };
    let p0 = [mean, (amp0 / mean).min(1.0), omega0, phase0];
    let fit = levenberg_marquardt(residuals, &p0, n, &LmOptions::default())?;
    let (scale, mut v, omega) = (fit.params[0], fit.params[1], fit.params[2]);
    if !(scale > 0.0) {
        return Err(Error::Fit(format!("fringe fit converged to non-positive amplitude {scale}")));
    }
    if omega.abs() * span < 2.0 * PI {
        return Err(Error::InsufficientData("fitted fringe spans less than one oscillation".into()));
    }
    v = v.abs();
    let std_error = fit.param_std(1, true).unwrap_or(f64::NAN);
    // C_max + C_min = 2A
    let mut est = VisibilityEstimate::new(v, std_error, EstimationMethod::FringeFit, n, fit.residual_norm(), 2.0 * scale);
    if fit.iterations >= LmOptions::default().max_iterations {
        est.warnings.push("fringe fit hit the iteration limit".into());
    }
    Ok(est)
}
