//! CSV, JSON and SVG artifacts.
//!
//! Numbers are written with 12 significant digits in `{:e}` form, which is
//! locale independent and diffs cleanly between runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{ExpError, Result};
use crate::sweep::SweepResult;

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))
}

/// Writes a table with a header row; every value column is numeric.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| ExpError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> ExpError {
    ExpError::io(path, std::io::Error::other(e.to_string()))
}

/// Sweep CSV: the axis, one column per requested quantity, then `dims` and
/// `flags`.
pub fn sweep_csv(path: &Path, res: &SweepResult) -> Result<()> {
    let mut header = vec![res.axis.name().to_string()];
    header.extend(res.columns.iter().cloned());
    header.extend(["dims".to_string(), "flags".to_string()]);
    let rows: Vec<Vec<String>> = res
        .rows
        .iter()
        .map(|r| {
            let mut out = vec![fmt_num(r.axis_value)];
            out.extend(r.values.iter().map(|&v| fmt_num(v)));
            out.push(r.dims.clone());
            out.push(r.flags.clone());
            out
        })
        .collect();
    write_table(path, &header, &rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialise");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ExpError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    std::fs::write(path, text).map_err(|e| ExpError::io(path, e))
}

/// One SVG per requested quantity, named `<stem>_<quantity>.svg`.
pub fn sweep_plots(dir: &Path, stem: &str, res: &SweepResult, quantities: &[crate::sweep::Quantity]) -> Result<Vec<PathBuf>> {
    let xs = res.axis_values();
    let mut written = Vec::new();
    for q in quantities {
        let series: Vec<Series> = q
            .columns()
            .into_iter()
            .map(|c| Series {
                ys: res.column(&c).expect("column exists"),
                name: c,
                xs: xs.clone(),
            })
            .collect();
        let svg = line_plot(&format!("{stem}: {q}"), res.axis.name(), "bits", &series, None);
        let path = dir.join(format!("{stem}_{q}.svg"));
        write_text(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo <= 1e-300 {
                let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
                (lo - pad, hi + pad)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        let pad = 0.05 * (y1 - y0);
        Self { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let x = self.x0 + f * (self.x1 - self.x0);
            let y = self.y0 + f * (self.y1 - self.y0);
            let (px, py) = (self.px(x), self.py(y));
            let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, b + 20.0, tick(x));
            let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#, l - 5.0);
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, py + 4.0, tick(y));
        }
        let _ = writeln!(svg, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 15.0, escape(xlabel));
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{v:.4}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

fn open(svg: &mut String) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
}

/// A self-contained line plot; non-finite points break the line. `vline`
/// draws a dashed marker at that x.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], vline: Option<f64>) -> String {
    let frame = Frame::new(
        series.iter().flat_map(|s| s.xs.iter().copied()),
        series.iter().flat_map(|s| s.ys.iter().copied()),
    );
    let mut svg = String::new();
    open(&mut svg);
    frame.axes(&mut svg, title, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            if !y.is_finite() {
                pen_down = false;
                continue;
            }
            let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, frame.px(x), frame.py(y));
            pen_down = true;
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, frame.px(x), frame.py(y));
        }
        let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.trim_end());
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, LEFT + 10.0, LEFT + 30.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, LEFT + 36.0, ly + 4.0, escape(&s.name));
    }
    if let Some(x) = vline {
        let px = frame.px(x);
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="5,4"/>"#, H - BOTTOM);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Bar histogram over equal-width bins with a dashed reference line.
pub fn histogram_plot(title: &str, xlabel: &str, edges: &[f64], counts: &[usize], reference: f64) -> String {
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut frame = Frame::new(edges.iter().copied().chain([reference]), [0.0, top].into_iter());
    frame.y0 = 0.0;
    let mut svg = String::new();
    open(&mut svg);
    frame.axes(&mut svg, title, xlabel, "count");
    for (k, &c) in counts.iter().enumerate() {
        let (xa, xb) = (frame.px(edges[k]), frame.px(edges[k + 1]));
        let (ya, yb) = (frame.py(c as f64), frame.py(0.0));
        let _ = writeln!(
            svg,
            r##"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="white" stroke-width="0.5"/>"##,
            (xb - xa).max(0.0),
            (yb - ya).max(0.0)
        );
    }
    let px = frame.px(reference);
    let _ = writeln!(svg, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2" stroke-dasharray="6,4"/>"##, H - BOTTOM);
    let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" fill="#d62728">coherent</text>"##, px + 4.0, TOP + 14.0);
    svg.push_str("</svg>\n");
    svg
}
