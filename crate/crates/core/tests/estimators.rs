use std::f64::consts::PI;

use fringecd::drift::{derive_seed, simulate_trace, CoincidenceTrace, CountNoise, DetectorModel, DriftProcess};
use fringecd::estimate::{
    estimate, estimate_fringefit, estimate_minmax, estimate_pdf_fit, EstimatorConfig, FringeFitOptions,
    MinMaxOptions, PdfFitOptions,
};
use proptest::prelude::*;
use rayon::prelude::*;

fn poisson_trace(v: f64, mean_max: f64, n: usize, seed: u64) -> CoincidenceTrace {
    let det = DetectorModel::new(0.1, mean_max / 0.1, seed);
    simulate_trace(v, 0.0, &DriftProcess::UniformRandomPhase, &det, n).unwrap()
}

fn noiseless(v: f64, drift: &DriftProcess, n: usize, seed: u64) -> CoincidenceTrace {
    let mut det = DetectorModel::new(0.1, 1e10, seed);
    det.noise = CountNoise::Noiseless;
    simulate_trace(v, 0.3, drift, &det, n).unwrap()
}

/// Visibility by matching sorted counts to arcsine quantiles
/// c(p) = m + h·sin(π(p − ½)) with linear least squares.
fn quantile_oracle(trace: &CoincidenceTrace) -> f64 {
    let mut c = trace.counts_f64();
    c.sort_by(f64::total_cmp);
    let n = c.len() as f64;
    let s: Vec<f64> = (0..c.len()).map(|i| (PI * ((i as f64 + 0.5) / n - 0.5)).sin()).collect();
    let (ms, mc) = (s.iter().sum::<f64>() / n, c.iter().sum::<f64>() / n);
    let cov: f64 = s.iter().zip(&c).map(|(a, b)| (a - ms) * (b - mc)).sum();
    let var: f64 = s.iter().map(|a| (a - ms).powi(2)).sum();
    let h = cov / var;
    let m = mc - h * ms;
    h / m
}

#[test]
fn noiseless_equidistributed_phase_matches_quantile_oracle() {
    // golden-ratio rotation fills the circle evenly, so sampling noise does not mask 1e-3
    let golden = DriftProcess::Linear { rate_rad_per_s: 2.0 * PI * 0.618_033_988_749_895 / 0.1 };
    for (i, v) in [0.4, 0.75, 0.9].into_iter().enumerate() {
        let t = noiseless(v, &golden, 20_000, 40 + i as u64);
        let oracle = quantile_oracle(&t);
        assert!((oracle - v).abs() < 1e-3, "oracle {oracle}");
        let est = estimate_pdf_fit(&t, &PdfFitOptions::default()).unwrap();
        assert!((est.visibility - v).abs() < 1e-3, "V = {v}: {}", est.visibility);
        assert!((est.visibility - oracle).abs() < 1e-3);
    }
}

#[test]
fn three_estimators_agree_on_noiseless_explored_traces() {
    let drift = DriftProcess::Linear { rate_rad_per_s: 3.0 };
    for v in [0.3, 0.5, 0.7, 0.85, 0.95] {
        let t = noiseless(v, &drift, 4000, 1);
        let a = estimate_minmax(&t, &MinMaxOptions::default()).unwrap().visibility;
        let b = estimate_fringefit(&t, &FringeFitOptions::default()).unwrap().visibility;
        let c = estimate_pdf_fit(&t, &PdfFitOptions::default()).unwrap().visibility;
        let d = estimate_pdf_fit(&t, &PdfFitOptions::poisson_ml()).unwrap().visibility;
        for (name, x) in [("min/max", a), ("fringe fit", b), ("pdf fit", c), ("poisson ml", d)] {
            assert!((x / v - 1.0).abs() < 5e-3, "{name} at V = {v}: {x}");
        }
    }
}

#[test]
fn minmax_bias_exceeds_pdf_fit_bias() {
    let traces: Vec<_> = (0..150).map(|i| poisson_trace(0.75, 1000.0, 500, derive_seed(77, i))).collect();
    let mean = |cfg: EstimatorConfig| {
        let v: Vec<f64> = traces.par_iter().map(|t| estimate(t, &cfg).unwrap().visibility).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let minmax = mean(EstimatorConfig::MinMax(MinMaxOptions::default())) - 0.75;
    let pdf = mean(EstimatorConfig::PdfFit(PdfFitOptions::default())) - 0.75;
    eprintln!("V = 0.75, mean-max 1000: min/max bias {minmax:+.5}, pdf-fit bias {pdf:+.5}");
    assert!(minmax > 0.0, "min/max is biased upward by Poisson extremes");
    assert!(minmax.abs() > 2.0 * pdf.abs());
}

#[test]
fn pdf_fit_error_scales_as_inverse_sqrt_bins() {
    let sizes = [250usize, 500, 1000, 2000];
    let log_se: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let se: Vec<f64> = (0..40u64)
                .into_par_iter()
                .map(|i| {
                    let t = poisson_trace(0.8, 1000.0, n, derive_seed(n as u64, i));
                    estimate_pdf_fit(&t, &PdfFitOptions::default()).unwrap().std_error
                })
                .collect();
            (se.iter().sum::<f64>() / se.len() as f64).ln()
        })
        .collect();
    let log_n: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let (mx, my) = (log_n.iter().sum::<f64>() / 4.0, log_se.iter().sum::<f64>() / 4.0);
    let slope = log_n.iter().zip(&log_se).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / log_n.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "log-log slope {slope}");
}

#[test]
fn reported_error_matches_scatter() {
    let est: Vec<_> = (0..200u64)
        .into_par_iter()
        .map(|i| estimate_pdf_fit(&poisson_trace(0.88, 1000.0, 500, derive_seed(5, i)), &PdfFitOptions::poisson_ml()).unwrap())
        .collect();
    let v: Vec<f64> = est.iter().map(|e| e.visibility).collect();
    let m = v.iter().sum::<f64>() / 200.0;
    let scatter = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 199.0).sqrt();
    let reported = est.iter().map(|e| e.std_error).sum::<f64>() / 200.0;
    assert!((reported / scatter - 1.0).abs() < 0.25, "reported {reported}, scatter {scatter}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pdf_fit_is_scale_invariant(k in 2u64..12, seed in 0u64..1000, v in 0.3f64..0.95) {
        let t = poisson_trace(v, 500.0, 500, seed);
        let scaled = CoincidenceTrace::from_counts(t.bin_duration, t.counts.iter().map(|c| c * k).collect()).unwrap();
        let a = estimate_pdf_fit(&t, &PdfFitOptions::default()).unwrap();
        let b = estimate_pdf_fit(&scaled, &PdfFitOptions::default()).unwrap();
        prop_assert!((a.visibility - b.visibility).abs() < 1e-9, "{} vs {}", a.visibility, b.visibility);
        let ratio = b.diagnostics.scale_estimate / a.diagnostics.scale_estimate;
        prop_assert!((ratio / k as f64 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn estimates_are_clamped_with_raw_value_kept(seed in 0u64..10_000, v in 0.0f64..=1.0, mean_max in 20.0f64..2000.0) {
        let t = poisson_trace(v, mean_max, 300, seed);
        let configs = [
            EstimatorConfig::MinMax(MinMaxOptions::default()),
            EstimatorConfig::PdfFit(PdfFitOptions::default()),
            EstimatorConfig::PdfFit(PdfFitOptions::poisson_ml()),
        ];
        for cfg in configs {
            if let Ok(e) = estimate(&t, &cfg) {
                prop_assert!((0.0..=1.0).contains(&e.visibility));
                prop_assert!(e.std_error.is_nan() || e.std_error >= 0.0);
                prop_assert_eq!(e.visibility, e.diagnostics.unclamped_visibility.clamp(0.0, 1.0));
            }
        }
    }
}
