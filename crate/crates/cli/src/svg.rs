//! Just enough SVG for line charts and box plots.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone)]
pub struct Series {
    pub color: &'static str,
    pub dashed: bool,
    pub markers: bool,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Plot frame shared by both chart kinds.
#[derive(Debug, Clone, Default)]
pub struct Frame {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Written as XML comments at the top of the file.
    pub provenance: Vec<String>,
    /// `(label, color, dashed)` legend entries.
    pub legend: Vec<(String, &'static str, bool)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn comment_safe(s: &str) -> String {
    s.replace("--", "- -")
}

/// Roughly `n` round tick values covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-12);
    let raw = span / n.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi - lo > 1e-12 { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { lo, hi, a, b }
    }

    fn map(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn header(out: &mut String, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    for p in &frame.provenance {
        let _ = writeln!(out, "<!-- {} -->", comment_safe(p));
    }
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(&frame.title)
    );
}

fn axes(out: &mut String, frame: &Frame, xs: &Scale, ys: &Scale, x_ticks: &[(f64, String)]) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    for t in ticks(ys.lo, ys.hi, 6) {
        let y = ys.map(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#e5e5e5"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    for (v, label) in x_ticks {
        let x = xs.map(*v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            y0 + 5.0,
            y0 + 19.0,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r##"<polyline points="{x0:.1},{y1:.1} {x0:.1},{y0:.1} {x1:.1},{y0:.1}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(&frame.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&frame.y_label)
    );
}

fn legend(out: &mut String, frame: &Frame) {
    let x = WIDTH - RIGHT + 16.0;
    for (i, (label, color, dashed)) in frame.legend.iter().enumerate() {
        let y = TOP + 8.0 + 18.0 * i as f64;
        let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 22.0,
            x + 28.0,
            y + 4.0,
            escape(label)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

pub fn line_chart(frame: &Frame, series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, frame);
    let points = || series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = bounds(points().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let (y_lo, y_hi) = bounds(points().map(|p| p.1)).map_or((0.0, 1.0), |(a, b)| padded(a, b));
    let xs = Scale::new(x_lo, x_hi, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(y_lo, y_hi, HEIGHT - BOTTOM, TOP);
    let x_ticks: Vec<(f64, String)> = ticks(xs.lo, xs.hi, 8).into_iter().map(|t| (t, fmt_tick(t))).collect();
    axes(&mut out, frame, &xs, &ys, &x_ticks);

    for s in series {
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", xs.map(x), ys.map(y)))
            .collect();
        if coords.is_empty() {
            continue;
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            coords.join(" "),
            s.color
        );
        if s.markers || coords.len() == 1 {
            for c in &coords {
                let (cx, cy) = c.split_once(',').unwrap();
                let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{}"/>"#, s.color);
            }
        }
    }
    legend(&mut out, frame);
    out.push_str("</svg>\n");
    out
}

/// One box per (group, member); `boxes[group][member]`.
pub fn box_chart(frame: &Frame, groups: &[String], colors: &[&'static str], boxes: &[Vec<Option<BoxStats>>]) -> String {
    let mut out = String::new();
    header(&mut out, frame);
    let all = boxes.iter().flatten().flatten();
    let (y_lo, y_hi) = bounds(all.flat_map(|b| [b.min, b.max])).map_or((0.0, 1.0), |(a, b)| padded(a, b));
    let n_groups = groups.len().max(1);
    let xs = Scale::new(0.0, n_groups as f64, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(y_lo, y_hi, HEIGHT - BOTTOM, TOP);
    let x_ticks: Vec<(f64, String)> = groups.iter().enumerate().map(|(i, g)| (i as f64 + 0.5, g.clone())).collect();
    axes(&mut out, frame, &xs, &ys, &x_ticks);

    let group_w = xs.map(1.0) - xs.map(0.0);
    let members = colors.len().max(1);
    let slot = group_w * 0.8 / members as f64;
    for (g, row) in boxes.iter().enumerate() {
        for (m, stats) in row.iter().enumerate() {
            let Some(b) = stats else { continue };
            let cx = xs.map(g as f64) + group_w * 0.1 + slot * (m as f64 + 0.5);
            let half = slot * 0.35;
            let c = colors[m];
            let (ymin, yq1, ymed, yq3, ymax) =
                (ys.map(b.min), ys.map(b.q1), ys.map(b.median), ys.map(b.q3), ys.map(b.max));
            let _ = writeln!(
                out,
                r#"<line x1="{cx:.1}" y1="{ymin:.1}" x2="{cx:.1}" y2="{ymax:.1}" stroke="{c}"/><rect x="{:.1}" y="{yq3:.1}" width="{:.1}" height="{:.1}" fill="{c}" fill-opacity="0.25" stroke="{c}"/><line x1="{:.1}" y1="{ymed:.1}" x2="{:.1}" y2="{ymed:.1}" stroke="{c}" stroke-width="2"/>"#,
                cx - half,
                2.0 * half,
                (yq1 - yq3).max(0.5),
                cx - half,
                cx + half
            );
        }
    }
    legend(&mut out, frame);
    out.push_str("</svg>\n");
    out
}
