//! Plot data: a columnar CSV for each dataset plus a small hand-written SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::drift::CoincidenceTrace;
use crate::error::{Error, Result};
use crate::estimate::CountHistogram;
use crate::pipeline::{BandwidthPoint, GaussianFit};

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum PlotData<'a> {
    FringeTrace(&'a CoincidenceTrace),
    CountHistogram { histogram: &'a CountHistogram, fit: &'a [f64] },
    GammaCurve { curves: &'a [Curve], marker: Option<(f64, f64)> },
    VisibilityVsBandwidth { points: &'a [BandwidthPoint], model: &'a Curve },
    CdHistogram(&'a GaussianFit),
}

impl PlotData<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            PlotData::FringeTrace(_) => "fringe-trace",
            PlotData::CountHistogram { .. } => "count-histogram",
            PlotData::GammaCurve { .. } => "gamma-curve",
            PlotData::VisibilityVsBandwidth { .. } => "visibility-vs-bandwidth",
            PlotData::CdHistogram(_) => "cd-histogram",
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            PlotData::FringeTrace(t) => t.is_empty(),
            PlotData::CountHistogram { histogram, .. } => histogram.counts.is_empty(),
            PlotData::GammaCurve { curves, .. } => curves.is_empty() || curves.iter().any(|c| c.x.is_empty()),
            PlotData::VisibilityVsBandwidth { points, .. } => points.is_empty(),
            PlotData::CdHistogram(g) => g.histogram.counts.is_empty(),
        }
    }
}

#[derive(Serialize)]
struct XyRow {
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct HistogramRow {
    bin_left: f64,
    bin_right: f64,
    count: u64,
    fit_value: f64,
}

#[derive(Serialize)]
struct GaussianSidecar {
    schema: u32,
    amplitude: f64,
    mean: f64,
    sigma: f64,
    mean_std_error: f64,
    n_samples: u64,
}

fn write_xy(path: &Path, x: &[f64], y: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (&x, &y) in x.iter().zip(y) {
        w.serialize(XyRow { x, y })?;
    }
    w.flush()?;
    Ok(())
}

fn write_histogram(path: &Path, hist: &CountHistogram, fit: &[f64]) -> Result<()> {
    if fit.len() != hist.counts.len() {
        return Err(Error::domain("histogram fit values do not match the bins"));
    }
    let mut w = csv::Writer::from_path(path)?;
    for (i, (&count, &fit_value)) in hist.counts.iter().zip(fit).enumerate() {
        w.serialize(HistogramRow { bin_left: hist.edges[i], bin_right: hist.edges[i + 1], count, fit_value })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV(s), any sidecar and an SVG for `data` into `dir`, using
/// `stem` as the file-name prefix. Returns the written paths in order.
pub fn emit_plot_data(dir: &Path, stem: &str, data: &PlotData) -> Result<Vec<PathBuf>> {
    if data.is_empty() {
        return Err(Error::InsufficientData(format!("refusing to write an empty {} plot", data.kind())));
    }
    let mut written = Vec::new();
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut fig;
    match data {
        PlotData::FringeTrace(trace) => {
            written.extend(super::trace::write_trace(&csv_path, trace)?);
            let t: Vec<f64> = (0..trace.len()).map(|i| i as f64 * trace.bin_duration).collect();
            let c = trace.counts_f64();
            fig = Figure::new("time (s)", "coincidences per bin", &t, &c);
            fig.polyline(&t, &c, COLORS[0]);
        }
        PlotData::CountHistogram { histogram, fit } => {
            write_histogram(&csv_path, histogram, fit)?;
            written.push(csv_path);
            fig = histogram_figure("counts per bin", histogram, fit);
        }
        PlotData::GammaCurve { curves, marker } => {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for curve in curves.iter() {
                let path = dir.join(format!("{stem}-{}.csv", curve.label));
                write_xy(&path, &curve.x, &curve.y)?;
                written.push(path);
                xs.extend(&curve.x);
                ys.extend(&curve.y);
            }
            ys.push(0.0);
            fig = Figure::new("γ", "visibility", &xs, &ys);
            for (i, curve) in curves.iter().enumerate() {
                fig.polyline(&curve.x, &curve.y, COLORS[i % COLORS.len()]);
                fig.legend(i, &curve.label, COLORS[i % COLORS.len()]);
            }
            if let Some((x, y)) = marker {
                fig.circle(*x, *y, 5.0, "#d62728");
            }
        }
        PlotData::VisibilityVsBandwidth { points, model } => {
            let x: Vec<f64> = points.iter().map(|p| p.sigma_lambda_nm).collect();
            let y: Vec<f64> = points.iter().map(|p| p.visibility).collect();
            write_xy(&csv_path, &x, &y)?;
            written.push(csv_path);
            let fit_path = dir.join(format!("{stem}-fit.csv"));
            write_xy(&fit_path, &model.x, &model.y)?;
            written.push(fit_path);
            let mut all_x = x.clone();
            all_x.extend(&model.x);
            let mut all_y = y.clone();
            all_y.extend(&model.y);
            fig = Figure::new("spectral rms width σλ (nm)", "visibility", &all_x, &all_y);
            fig.polyline(&model.x, &model.y, COLORS[1]);
            for p in points.iter() {
                fig.error_bar(p.sigma_lambda_nm, p.visibility, p.std_error, COLORS[0]);
                fig.circle(p.sigma_lambda_nm, p.visibility, 3.5, COLORS[0]);
            }
        }
        PlotData::CdHistogram(gauss) => {
            let fit: Vec<f64> =
                gauss.histogram.edges.windows(2).map(|e| gauss.eval(0.5 * (e[0] + e[1]))).collect();
            write_histogram(&csv_path, &gauss.histogram, &fit)?;
            written.push(csv_path);
            let json_path = dir.join(format!("{stem}.json"));
            super::write_json(
                &json_path,
                &GaussianSidecar {
                    schema: 1,
                    amplitude: gauss.amplitude,
                    mean: gauss.mean,
                    sigma: gauss.sigma,
                    mean_std_error: gauss.mean_std_error,
                    n_samples: gauss.histogram.total(),
                },
            )?;
            written.push(json_path);
            fig = histogram_figure("|D| (ps/(nm·km))", &gauss.histogram, &fit);
            if gauss.sigma > 0.0 {
                let lo = gauss.histogram.edges[0];
                let hi = *gauss.histogram.edges.last().expect("non-empty");
                let xs: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
                let ys: Vec<f64> = xs.iter().map(|&x| gauss.eval(x)).collect();
                fig.polyline(&xs, &ys, COLORS[1]);
            }
        }
    }
    let svg_path = dir.join(format!("{stem}.svg"));
    std::fs::write(&svg_path, fig.finish())?;
    written.push(svg_path);
    Ok(written)
}

fn histogram_figure(x_label: &str, hist: &CountHistogram, fit: &[f64]) -> Figure {
    let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let mut ys = counts.clone();
    ys.extend(fit);
    ys.push(0.0);
    let mut fig = Figure::new(x_label, "occurrences", &hist.edges, &ys);
    for (i, &c) in counts.iter().enumerate() {
        fig.bar(hist.edges[i], hist.edges[i + 1], c, COLORS[0]);
    }
    let centers: Vec<f64> = hist.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    fig.polyline(&centers, fit, COLORS[1]);
    fig
}

const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

struct Figure {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    body: String,
}

fn span(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    fn new(x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> Self {
        let (x0, x1) = span(xs);
        let (y0, y1) = span(ys);
        let mut fig = Self { x0, x1, y0, y1, body: String::new() };
        fig.axes(x_label, y_label);
        fig
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (l, b, r, t) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
        let _ = writeln!(
            self.body,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for i in 0..=5 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 5.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 5.0;
            let (px, py) = (self.px(fx), self.py(fy));
            let _ = writeln!(
                self.body,
                r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                b + 5.0,
                b + 18.0,
                tick_label(fx)
            );
            let _ = writeln!(
                self.body,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                l - 5.0,
                l - 8.0,
                py + 4.0,
                tick_label(fy)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            0.5 * (l + r),
            HEIGHT - 10.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            0.5 * (t + b),
            0.5 * (t + b),
            escape(y_label)
        );
    }

    fn polyline(&mut self, xs: &[f64], ys: &[f64], color: &str) {
        let mut pts = String::new();
        for (&x, &y) in xs.iter().zip(ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", self.px(x), self.py(y));
            }
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{color}"/>"#, self.px(x), self.py(y));
    }

    fn error_bar(&mut self, x: f64, y: f64, err: f64, color: &str) {
        if err.is_finite() {
            let px = self.px(x);
            let _ = writeln!(
                self.body,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                self.py(y - err),
                self.py(y + err)
            );
        }
    }

    fn bar(&mut self, left: f64, right: f64, height: f64, color: &str) {
        let (x, w) = (self.px(left), self.px(right) - self.px(left));
        let (top, base) = (self.py(height), self.py(self.y0.max(0.0)));
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="{color}" fill-opacity="0.45"/>"#,
            (base - top).max(0.0)
        );
    }

    fn legend(&mut self, index: usize, label: &str, color: &str) {
        let y = TOP + 18.0 + 16.0 * index as f64;
        let x = WIDTH - RIGHT - 140.0;
        let _ = writeln!(
            self.body,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".to_string() } else { s.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_refused() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_plot_data(dir.path(), "g", &PlotData::GammaCurve { curves: &[], marker: None }).unwrap_err();
        assert!(err.to_string().contains("empty gamma-curve"), "{err}");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn gamma_curve_files() {
        let dir = tempfile::tempdir().unwrap();
        let curve = Curve { label: "gaussian".into(), x: vec![0.0, 1.0], y: vec![1.0, 0.84] };
        let files =
            emit_plot_data(dir.path(), "gamma", &PlotData::GammaCurve { curves: &[curve], marker: Some((0.8, 0.88)) })
                .unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(std::fs::read_to_string(&files[0]).unwrap(), "x,y\n0.0,1.0\n1.0,0.84\n");
        let svg = std::fs::read_to_string(&files[1]).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<circle") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn histogram_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let hist = CountHistogram { edges: vec![0.0, 1.0, 2.0], counts: vec![3, 5] };
        let files =
            emit_plot_data(dir.path(), "h", &PlotData::CountHistogram { histogram: &hist, fit: &[2.5, 5.5] }).unwrap();
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "bin_left,bin_right,count,fit_value\n0.0,1.0,3,2.5\n1.0,2.0,5,5.5\n");
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(0.5), "0.5");
        assert_eq!(tick_label(17.0), "17");
        assert_eq!(tick_label(2.2e-26), "2.20e-26");
    }
}
