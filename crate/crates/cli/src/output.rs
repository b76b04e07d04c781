//! Artifact writers: CSV tables, the JSON range report and SVG step charts.

use std::fmt::Write as _;
use std::path::Path;

use ranger_core::correlation::{CorrelationSeries, HitReport, RangeReport};
use ranger_core::engine::{CountsTable, RunSummary};
use serde::Serialize;

use crate::error::CliError;

pub const COUNTS_HEADER: &str = "index,n_h,n_v";
pub const G_SERIES_HEADER: &str = "index,g";

pub fn counts_csv(table: &CountsTable) -> String {
    let mut out = String::with_capacity(16 * table.locations());
    out.push_str(COUNTS_HEADER);
    out.push('\n');
    for i in 1..=table.locations() {
        let _ = writeln!(out, "{i},{},{}", table.h(i), table.v(i));
    }
    out
}

pub fn g_series_csv(series: &CorrelationSeries) -> String {
    let mut out = String::with_capacity(24 * series.len());
    out.push_str(G_SERIES_HEADER);
    out.push('\n');
    for (i, g) in series.iter() {
        let _ = writeln!(out, "{i},{g}");
    }
    out
}

/// Reads back `index,g` rows.
pub fn parse_g_series_csv(text: &str) -> Result<Vec<(usize, f64)>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(G_SERIES_HEADER) {
        return Err(CliError::Validation(format!(
            "g series csv must start with {G_SERIES_HEADER:?}"
        )));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let bad = || CliError::Validation(format!("g series csv row {}: {line:?}", n + 2));
            let (i, g) = line.split_once(',').ok_or_else(bad)?;
            Ok((i.parse().map_err(|_| bad())?, g.parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Serialized range report. Field order is the JSON key order.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReportJson {
    pub detected: bool,
    pub estimated_range_m: Option<f64>,
    pub resolution_m: f64,
    pub hit_index: Option<usize>,
    pub crossing_index: Option<usize>,
    pub g_hit: f64,
    pub argmax: usize,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub threshold_k: f64,
    pub min_baseline: usize,
    /// `null` when the baseline has no spread.
    pub snr: Option<f64>,
    pub efficiency: f64,
    pub detected_pairs: u64,
    pub emitted_pairs: u64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config_hash: String,
    pub config: String,
}

/// Keys of [`ReportJson`] in serialization order.
pub const REPORT_KEYS: [&str; 19] = [
    "detected",
    "estimated_range_m",
    "resolution_m",
    "hit_index",
    "crossing_index",
    "g_hit",
    "argmax",
    "baseline_mean",
    "baseline_std",
    "threshold_k",
    "min_baseline",
    "snr",
    "efficiency",
    "detected_pairs",
    "emitted_pairs",
    "wall_time_s",
    "seed",
    "config_hash",
    "config",
];

impl ReportJson {
    pub fn new(
        range: &RangeReport,
        hit: &HitReport,
        summary: &RunSummary,
        min_baseline: usize,
        config_hash: String,
        config: String,
    ) -> Self {
        Self {
            detected: range.detected,
            estimated_range_m: range.range_m,
            resolution_m: range.resolution_m,
            hit_index: range.estimated_hit_location,
            crossing_index: hit.crossing_index,
            g_hit: hit.g_hit,
            argmax: hit.argmax,
            baseline_mean: hit.baseline_mean,
            baseline_std: hit.baseline_std,
            threshold_k: hit.threshold_k,
            min_baseline,
            snr: range.snr.is_finite().then_some(range.snr),
            efficiency: range.efficiency,
            detected_pairs: summary.detected,
            emitted_pairs: summary.emitted,
            wall_time_s: summary.wall_time,
            seed: summary.seed,
            config_hash,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path.display(), e))
}

/// One chart: a step trace of `(index, value)` points.
pub struct Panel<'a> {
    pub title: String,
    pub points: &'a [(usize, f64)],
    /// Vertical marker, e.g. the true or estimated hit location.
    pub marker: Option<usize>,
}

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 36.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel_body(out: &mut String, panel: &Panel<'_>, y0: f64) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let (x_min, x_max) = match (panel.points.first(), panel.points.last()) {
        (Some(a), Some(b)) => (a.0 as f64, (b.0 as f64).max(a.0 as f64 + 1.0)),
        _ => (0.0, 1.0),
    };
    let y_max = panel.points.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| y0 + MARGIN_T + plot_h - y / y_max * plot_h;

    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" font-size="14" font-family="sans-serif">{}</text>"##,
        MARGIN_L,
        y0 + 18.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#888"/>"##,
        MARGIN_L,
        y0 + MARGIN_T,
        plot_w,
        plot_h
    );
    for (value, label_y) in [(0.0, sy(0.0)), (y_max, sy(y_max))] {
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" font-family="sans-serif">{:.1}</text>"##,
            MARGIN_L - 6.0,
            label_y + 4.0,
            value
        );
    }
    for x in [x_min, x_max] {
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"##,
            sx(x),
            y0 + PANEL_H - MARGIN_B + 16.0,
            x as usize
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">location index i</text>"##,
        MARGIN_L + plot_w / 2.0,
        y0 + PANEL_H - 6.0
    );
    if let Some(m) = panel.marker {
        let x = sx(m as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#c33" stroke-dasharray="4 3"/>"##,
            y0 + MARGIN_T,
            y0 + MARGIN_T + plot_h
        );
    }
    if !panel.points.is_empty() {
        let mut path = String::new();
        for (k, &(i, g)) in panel.points.iter().enumerate() {
            let (x, y) = (sx(i as f64), sy(g));
            if k == 0 {
                let _ = write!(path, "M{x:.2},{y:.2}");
            } else {
                let _ = write!(path, " H{x:.2} V{y:.2}");
            }
        }
        let _ = writeln!(
            out,
            r##"<path d="{path}" fill="none" stroke="#1f5fa8" stroke-width="1"/>"##
        );
    }
}

/// Renders panels stacked vertically into one SVG document.
pub fn render_svg(panels: &[Panel<'_>]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (k, panel) in panels.iter().enumerate() {
        panel_body(&mut out, panel, k as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}
