//! Report document and the flat-file emitters (CSV series, SVG charts).
//! Everything here is deterministic: fixed field orders, fixed float
//! formatting, no clocks.

use hypdecay::classify::ClassificationReport;
use serde::Serialize;
use std::io::{self, Write};
use std::path::Path;

#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    /// FNV-1a over the canonical serialization of the effective config with
    /// the operator resolved inline, so file-based and inline configs that
    /// mean the same run hash the same.
    pub config_hash: String,
    pub operator: OperatorInfo,
    pub grid: GridInfo,
    pub classification: ClassificationReport,
    pub per_pq: Vec<PredictionRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Vec<VerificationRow>>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> ToolInfo {
        ToolInfo { name: "hypdecay", version: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Serialize)]
pub struct OperatorInfo {
    pub description: String,
    pub n: usize,
    pub m: usize,
    pub strictly_hyperbolic: bool,
    pub min_principal_gap: f64,
}

#[derive(Serialize)]
pub struct GridInfo {
    pub extent: f64,
    pub points_per_axis: usize,
    pub nodes: usize,
}

/// Predicted envelope exponents for one `(p, q, r, |alpha|)` combination:
/// the norm is bounded by `<t>^power e^{-exp_rate t}` times data norms.
#[derive(Serialize)]
pub struct PredictionRow {
    pub p: f64,
    pub q: String,
    pub time_order: u32,
    pub space_order: u32,
    pub power: f64,
    pub exp_rate: f64,
}

#[derive(Serialize)]
pub struct VerificationRow {
    pub p: f64,
    pub q: String,
    pub time_order: u32,
    pub space_order: u32,
    /// Which measured series was graded: "linf", "l2", or "none".
    pub surrogate: String,
    pub predicted_power: f64,
    pub predicted_rate: f64,
    pub fitted_power: f64,
    pub fitted_rate: f64,
    pub fit_model: String,
    pub fit_rms: f64,
    pub verdict: String,
    pub detail: String,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn write_report(path: &Path, report: &Report) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn write_series_csv(path: &Path, times: &[f64], values: &[f64]) -> io::Result<()> {
    let mut out = String::from("t,value\n");
    for (t, v) in times.iter().zip(values) {
        out.push_str(&format!("{t:.12e},{v:.12e}\n"));
    }
    std::fs::write(path, out)
}

pub struct ChartSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 420.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal line chart. Log axes drop nonpositive samples; tick marks sit on
/// decades (log) or on a 1-2-5 ladder (linear).
pub fn write_chart_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[ChartSeries],
    log_x: bool,
    log_y: bool,
) -> io::Result<()> {
    let map = |v: f64, log: bool| if log { v.log10() } else { v };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if (log_x && x <= 0.0) || (log_y && y <= 0.0) {
                continue;
            }
            xs.push(map(x, log_x));
            ys.push(map(y, log_y));
        }
    }
    let span = |vals: &[f64]| -> (f64, f64) {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (CHART_W - MARGIN_L - MARGIN_R);
    let py = |y: f64| CHART_H - MARGIN_B - (y - y0) / (y1 - y0) * (CHART_H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CHART_W}\" height=\"{CHART_H}\" \
         viewBox=\"0 0 {CHART_W} {CHART_H}\" font-family=\"ui-monospace, monospace\" \
         font-size=\"11\">\n<rect width=\"{CHART_W}\" height=\"{CHART_H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        0.5 * CHART_W,
        escape(title)
    ));

    for (value, label) in ticks(x0, x1, log_x) {
        let x = px(value);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_T,
            CHART_H - MARGIN_B
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n",
            CHART_H - MARGIN_B + 16.0
        ));
    }
    for (value, label) in ticks(y0, y1, log_y) {
        let y = py(value);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_L,
            CHART_W - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>\n",
            MARGIN_L - 6.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#333333\"/>\n",
        CHART_W - MARGIN_L - MARGIN_R,
        CHART_H - MARGIN_T - MARGIN_B
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        0.5 * CHART_W,
        CHART_H - 10.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        0.5 * CHART_H,
        0.5 * CHART_H,
        escape(y_label)
    ));

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| !(log_x && *x <= 0.0) && !(log_y && *y <= 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(map(x, log_x)), py(map(y, log_y))))
            .collect();
        if pts.len() >= 2 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>\n",
            CHART_W - MARGIN_R - 160.0,
            MARGIN_T + 16.0 + 14.0 * si as f64,
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(svg.as_bytes())
}

/// Tick positions in mapped (possibly log10) coordinates with labels.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let mut out = Vec::new();
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        let step = (((last - first) as usize / 8) + 1) as i64;
        let mut d = first;
        while d <= last {
            out.push((d as f64, format!("1e{d}")));
            d += step;
        }
        if out.is_empty() {
            out.push((0.5 * (lo + hi), format!("{:.2}", 0.5 * (lo + hi))));
        }
        return out;
    }
    let range = hi - lo;
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| range / s <= 6.0)
        .unwrap_or(mag);
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + 1e-12 * range {
        let label =
            if step >= 1.0 { format!("{v:.0}") } else { format!("{v:.*}", (-step.log10().floor()) as usize) };
        out.push((v, label));
        v += step;
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_hash_matches_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn chart_is_valid_and_deterministic() {
        let dir = std::env::temp_dir().join("hypdecay_chart_test");
        std::fs::create_dir_all(&dir).unwrap();
        let series = vec![ChartSeries {
            label: "linf r=0 a=0".into(),
            points: (1..30).map(|k| (k as f64, (k as f64).powf(-0.5))).collect(),
        }];
        let p1 = dir.join("a.svg");
        let p2 = dir.join("b.svg");
        write_chart_svg(&p1, "t vs norm", "t", "norm", &series, true, true).unwrap();
        write_chart_svg(&p2, "t vs norm", "t", "norm", &series, true, true).unwrap();
        let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert!(text.contains("polyline"));
    }
}
