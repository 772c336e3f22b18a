//! Static SVG charts. Every plotted point carries its numeric value in
//! `data-*` attributes so the charts can be checked mechanically.

use std::fmt::Write;

use super::{GalleryRow, StabilityRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    lo: f64,
    hi: f64,
    slots: usize,
}

impl Frame {
    fn new(lo: f64, hi: f64, slots: usize) -> Self {
        let (lo, hi) = if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        let pad = (hi - lo) * 0.05;
        Self {
            lo: lo - pad,
            hi: hi + pad,
            slots: slots.max(1),
        }
    }

    fn y(&self, v: f64) -> f64 {
        let plot = HEIGHT - TOP - BOTTOM;
        TOP + plot * (1.0 - (v - self.lo) / (self.hi - self.lo))
    }

    fn x(&self, i: usize) -> f64 {
        let step = (WIDTH - LEFT - RIGHT) / self.slots as f64;
        LEFT + step * (i as f64 + 0.5)
    }

    fn step(&self) -> f64 {
        (WIDTH - LEFT - RIGHT) / self.slots as f64
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, labels: &[String], y_label: &str) {
    let bottom = HEIGHT - BOTTOM;
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bottom}" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    for t in 0..=4 {
        let v = frame.lo + (frame.hi - frame.lo) * t as f64 / 4.0;
        let y = frame.y(v);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            frame.x(i),
            bottom + 18.0,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" transform="rotate(-90 18 {:.2})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

/// Normalized correlation per condition, one marker per row joined by a
/// line. Markers carry `data-condition`, `data-r` and `data-y`.
pub fn render_falloff(title: &str, rows: &[StabilityRow]) -> String {
    let values: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    let lo = values.iter().copied().fold(0.0, f64::min);
    let hi = values.iter().copied().fold(1.0, f64::max);
    let frame = Frame::new(lo, hi, rows.len());
    let mut out = String::new();
    open(&mut out, title);
    let labels: Vec<String> = rows.iter().map(|r| r.condition.to_string()).collect();
    axes(&mut out, &frame, &labels, "normalized correlation");
    let unit = frame.y(1.0);
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{unit:.2}" x2="{}" y2="{unit:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        WIDTH - RIGHT
    );
    let points: Vec<String> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{:.2},{:.2}", frame.x(i), frame.y(r.normalized)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points.join(" ")
    );
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue" data-condition="{}" data-r="{}" data-y="{}"/>"#,
            frame.x(i),
            frame.y(r.normalized),
            escape(&r.condition.to_string()),
            r.r,
            r.normalized
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Box plot per condition: box from q1 to q3, median bar, whiskers and
/// outlier points. Each box group carries its statistics as `data-*`.
pub fn render_boxplot(title: &str, rows: &[GalleryRow]) -> String {
    let lo = rows
        .iter()
        .flat_map(|r| std::iter::once(r.stats.lower_whisker).chain(r.stats.outliers.iter().copied()))
        .fold(f64::INFINITY, f64::min);
    let hi = rows
        .iter()
        .flat_map(|r| std::iter::once(r.stats.upper_whisker).chain(r.stats.outliers.iter().copied()))
        .fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if rows.is_empty() { (0.0, 1.0) } else { (lo, hi) };
    let frame = Frame::new(lo, hi, rows.len());
    let mut out = String::new();
    open(&mut out, title);
    let labels: Vec<String> = rows.iter().map(|r| r.condition.to_string()).collect();
    axes(&mut out, &frame, &labels, "impostor score");
    let half = (frame.step() * 0.3).min(30.0);
    for (i, row) in rows.iter().enumerate() {
        let s = &row.stats;
        let x = frame.x(i);
        let _ = writeln!(
            out,
            r#"<g data-condition="{}" data-n="{}" data-q1="{}" data-median="{}" data-q3="{}" data-lower="{}" data-upper="{}">"#,
            escape(&row.condition.to_string()),
            s.n,
            s.q1,
            s.median,
            s.q3,
            s.lower_whisker,
            s.upper_whisker
        );
        let (y_q1, y_q3) = (frame.y(s.q1), frame.y(s.q3));
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{y_q3:.2}" stroke="black"/>"#,
            frame.y(s.upper_whisker)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y_q1:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            frame.y(s.lower_whisker)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{y_q3:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
            x - half,
            2.0 * half,
            (y_q1 - y_q3).max(0.0)
        );
        let ym = frame.y(s.median);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ym:.2}" x2="{:.2}" y2="{ym:.2}" stroke="black" stroke-width="2"/>"#,
            x - half,
            x + half
        );
        for o in &s.outliers {
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{:.2}" r="2" fill="none" stroke="black" data-value="{o}"/>"#,
                frame.y(*o)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
