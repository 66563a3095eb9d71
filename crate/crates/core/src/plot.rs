//! Minimal self-contained SVG rendering of sweep results: MSE and BER
//! against SNR on a log-scaled vertical axis, one polyline per
//! (channel length, estimator) series. No drawing dependencies.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sim::{SweepResult, SweepRow};

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

struct Series {
    label: String,
    color: &'static str,
    dashed: bool,
    /// (snr_db, value) with nonpositive values already dropped.
    points: Vec<(f64, f64)>,
}

fn collect_series(rows: &[SweepRow], metric: impl Fn(&SweepRow) -> f64) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        let value = metric(row);
        let label = format!("L={} {}", row.channel_len, row.estimator);
        let entry = match series.iter_mut().find(|s| s.label == label) {
            Some(entry) => entry,
            None => {
                let idx = series.len();
                series.push(Series {
                    label,
                    color: PALETTE[idx % PALETTE.len()],
                    dashed: idx >= PALETTE.len(),
                    points: Vec::new(),
                });
                series.last_mut().expect("just pushed")
            }
        };
        if value > 0.0 && value.is_finite() {
            entry.points.push((row.snr_db, value));
        }
    }
    series
}

fn panel(title: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = write!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>",
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0
    );

    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    if xs.is_empty() {
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no positive data</text></svg>",
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        return svg;
    }
    let (x_min, x_max) = bounds(&xs);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let (y_min, y_max) = bounds(&ys);
    // Log axis padded to whole decades.
    let dec_min = y_min.log10().floor();
    let dec_max = y_max.log10().ceil().max(dec_min + 1.0);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |x: f64| MARGIN_L + (x - x_min) / x_span * plot_w;
    let y_of = |y: f64| MARGIN_T + (dec_max - y.log10()) / (dec_max - dec_min) * plot_h;

    let _ = write!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>"
    );
    let mut dec = dec_min;
    while dec <= dec_max + 0.5 {
        let y = y_of(10f64.powf(dec));
        let _ = write!(
            svg,
            "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{}</text>",
            MARGIN_L + plot_w,
            MARGIN_L - 6.0,
            y + 4.0,
            dec as i64
        );
        dec += 1.0;
    }
    let mut ticks = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for &x in ticks.iter().take(16) {
        let px = x_of(x);
        let _ = write!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{MARGIN_T}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>\
             <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x}</text>",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 16.0
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">SNR (dB)</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let _ = write!(d, "{}{:.1},{:.1}", if j == 0 { "" } else { " " }, x_of(x), y_of(y));
        }
        let dash = if s.dashed { " stroke-dasharray=\"6 3\"" } else { "" };
        let _ = write!(
            svg,
            "<polyline points=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>",
            s.color
        );
        for &(x, y) in &s.points {
            let _ = write!(
                svg,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{}\"/>",
                x_of(x),
                y_of(y),
                s.color
            );
        }
        let ly = MARGIN_T + 14.0 * i as f64 + 8.0;
        let lx = MARGIN_L + plot_w + 10.0;
        let _ = write!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" \
             stroke-width=\"1.5\"{dash}/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 18.0,
            s.color,
            lx + 24.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// Two stacked SVG panels (channel-estimate MSE, then BER) as one SVG
/// document; series with no positive samples render as an empty panel note.
pub fn render_sweep_svg(result: &SweepResult) -> String {
    let mse = panel("Channel estimation MSE vs SNR", &collect_series(&result.rows, |r| r.mse));
    let ber = panel("Bit error rate vs SNR", &collect_series(&result.rows, |r| r.ber));
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{}\" \
         viewBox=\"0 0 {WIDTH} {}\">\
         <g>{mse}</g><g transform=\"translate(0,{HEIGHT})\">{ber}</g></svg>",
        HEIGHT * 2.0,
        HEIGHT * 2.0
    )
}

/// Writes the sweep plot to an SVG file.
pub fn write_plot(result: &SweepResult, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, render_sweep_svg(result)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
