//! Distribution of the normalized coincidence level x = (1 + V cos φ)/2 when
//! the phase φ is uniform. Support is [(1 − V)/2, (1 + V)/2].

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub probability: f64,
    /// The argument lay outside the support and was moved to the nearest edge.
    pub clamped: bool,
}

fn check_visibility(visibility: f64) -> Result<()> {
    if visibility > 0.0 && visibility <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("arcsine law needs 0 < V ≤ 1, got {visibility}")))
    }
}

/// Ψ(x) = asin((2/V)(x − ½))/π + ½.
pub fn arcsine_cdf(x: f64, visibility: f64) -> Result<CdfValue> {
    check_visibility(visibility)?;
    let z = 2.0 * (x - 0.5) / visibility;
    let clamped = !(-1.0..=1.0).contains(&z);
    Ok(CdfValue { probability: z.clamp(-1.0, 1.0).asin() / PI + 0.5, clamped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgePolicy {
    /// Return +∞ at or beyond the support edges.
    #[default]
    Infinite,
    Error,
}

/// ξ(x) = 2/(πV·√(1 + (−4x² + 4x − 1)/V²)).
pub fn arcsine_pdf(x: f64, visibility: f64, edge: EdgePolicy) -> Result<f64> {
    check_visibility(visibility)?;
    let inner = 1.0 + (-4.0 * x * x + 4.0 * x - 1.0) / (visibility * visibility);
    if inner <= 0.0 {
        return match edge {
            EdgePolicy::Infinite => Ok(f64::INFINITY),
            EdgePolicy::Error => Err(Error::domain(format!("x = {x} is not strictly inside the support"))),
        };
    }
    Ok(2.0 / (PI * visibility * inner.sqrt()))
}

/// CDF of the count level c for a fringe spanning [c_min, c_max].
pub(crate) fn count_cdf(c: f64, c_min: f64, c_max: f64) -> f64 {
    let z = (2.0 * c - c_min - c_max) / (c_max - c_min);
    z.clamp(-1.0, 1.0).asin() / PI + 0.5
}

/// Kolmogorov–Smirnov distance between samples of x and the arcsine law.
pub fn ks_distance(samples: &[f64], visibility: f64) -> Result<f64> {
    check_visibility(visibility)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = arcsine_cdf(x, visibility)?.probability;
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}
