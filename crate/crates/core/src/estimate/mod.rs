//! Visibility estimators for free-running coincidence traces.
//!
//! Three routes are provided: extreme-value contrast, a sinusoid fit over a
//! window of the time series, and a fit of the arcsine count distribution
//! (the default, which uses every bin regardless of phase order).

mod arcsine;
mod fringe;
mod minmax;
mod pdf_fit;

use serde::{Deserialize, Serialize};

use crate::drift::CoincidenceTrace;
use crate::error::Result;

pub use arcsine::{arcsine_cdf, arcsine_pdf, ks_distance, CdfValue, EdgePolicy};
pub use fringe::{estimate_fringefit, FringeFitOptions};
pub use minmax::{estimate_minmax, MinMaxOptions};
pub use pdf_fit::{estimate_pdf_fit, freedman_diaconis_bins, CountHistogram, PdfFitMode, PdfFitOptions};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    MinMax,
    FringeFit,
    PdfFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_bins_used: usize,
    pub residual_norm: f64,
    /// Estimated C_max + C_min, in counts per bin.
    pub scale_estimate: f64,
    /// Visibility before clipping to [0, 1].
    pub unclamped_visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub std_error: f64,
    pub method: EstimationMethod,
    pub diagnostics: FitDiagnostics,
    pub warnings: Vec<String>,
}

impl VisibilityEstimate {
    pub(crate) fn new(
        raw_visibility: f64,
        std_error: f64,
        method: EstimationMethod,
        n_bins_used: usize,
        residual_norm: f64,
        scale_estimate: f64,
    ) -> Self {
        let mut warnings = Vec::new();
        if !(0.0..=1.0).contains(&raw_visibility) {
            warnings.push(format!("visibility {raw_visibility:.6} clipped to [0, 1]"));
        }
        let std_error = if std_error.is_finite() && std_error >= 0.0 {
            std_error
        } else {
            warnings.push("standard error unavailable".into());
            f64::NAN
        };
        Self {
            visibility: raw_visibility.clamp(0.0, 1.0),
            std_error,
            method,
            diagnostics: FitDiagnostics {
                n_bins_used,
                residual_norm,
                scale_estimate,
                unclamped_visibility: raw_visibility,
            },
            warnings,
        }
    }

    pub fn report(&self) -> EstimationReport {
        EstimationReport {
            schema: REPORT_SCHEMA_VERSION,
            method: self.method,
            visibility: self.visibility,
            std_error: self.std_error,
            n_bins_used: self.diagnostics.n_bins_used,
            scale: self.diagnostics.scale_estimate,
            warnings: self.warnings.clone(),
        }
    }
}

/// Flat JSON form of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub schema: u32,
    pub method: EstimationMethod,
    pub visibility: f64,
    pub std_error: f64,
    pub n_bins_used: usize,
    pub scale: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EstimatorConfig {
    MinMax(MinMaxOptions),
    FringeFit(FringeFitOptions),
    PdfFit(PdfFitOptions),
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig::PdfFit(PdfFitOptions::default())
    }
}

pub fn estimate(trace: &CoincidenceTrace, config: &EstimatorConfig) -> Result<VisibilityEstimate> {
    match config {
        EstimatorConfig::MinMax(o) => estimate_minmax(trace, o),
        EstimatorConfig::FringeFit(o) => estimate_fringefit(trace, o),
        EstimatorConfig::PdfFit(o) => estimate_pdf_fit(trace, o),
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}
