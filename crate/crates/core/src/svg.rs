//! Minimal SVG charts. Each chart is derived from a CSV written alongside
//! it; the SVG never holds numbers that the CSV does not.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, esc(title)).unwrap();
}

/// Linear map of [lo, hi] onto [a, b].
struct Axis {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        Axis { lo, hi, a, b }
    }

    fn map(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn axes(out: &mut String, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).unwrap();
    for t in x.ticks() {
        let px = x.map(t);
        writeln!(out, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{t:.3}</text>"#, y0 + 15.0).unwrap();
    }
    for t in y.ticks() {
        let py = y.map(t);
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t:.3}</text>"#, x0 - 5.0, py + 4.0).unwrap();
    }
    writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 20.0, esc(xlabel)).unwrap();
    writeln!(
        out,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(ylabel)
    )
    .unwrap();
}

fn legend(out: &mut String, names: &[String]) {
    for (i, n) in names.iter().enumerate() {
        let y = TOP + 10.0 + 16.0 * i as f64;
        let c = PALETTE[i % PALETTE.len()];
        writeln!(out, r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{c}"/>"#, W - RIGHT + 10.0, y - 9.0).unwrap();
        writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, W - RIGHT + 25.0, esc(n)).unwrap();
    }
}

/// Square heatmap; `None` cells are drawn grey.
pub fn heatmap(title: &str, labels: &[String], values: &[Option<f64>]) -> String {
    let n = labels.len();
    let cell = (480.0 / n.max(1) as f64).clamp(2.0, 40.0);
    let margin = 140.0;
    let size = margin + cell * n as f64 + 80.0;
    let (lo, hi) = bounds(values.iter().flatten().copied());
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let mut out = String::new();
    header(&mut out, size, size, title);
    for i in 0..n {
        for j in 0..n {
            let fill = match values[i * n + j] {
                Some(v) => {
                    let t = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                    let r = (255.0 * t) as u8;
                    let b = (255.0 * (1.0 - t)) as u8;
                    format!("rgb({r},{},{b})", (80.0 + 60.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8)
                }
                None => "#cccccc".to_string(),
            };
            writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{fill}"/>"#,
                margin + j as f64 * cell,
                margin + i as f64 * cell
            )
            .unwrap();
        }
    }
    if cell >= 8.0 {
        for (i, l) in labels.iter().enumerate() {
            let c = margin + (i as f64 + 0.5) * cell;
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, margin - 4.0, c + 4.0, esc(l)).unwrap();
            writeln!(
                out,
                r#"<text x="{c:.1}" y="{:.1}" text-anchor="start" transform="rotate(-60 {c:.1} {:.1})">{}</text>"#,
                margin - 4.0,
                margin - 4.0,
                esc(l)
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}">range {lo:.3} .. {hi:.3}, grey = undefined</text>"#,
        margin,
        size - 20.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Scatter with highlighted points and an optional vertical reference line.
pub fn scatter(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    points: &[(f64, f64, bool)],
    vline: Option<f64>,
    labels: (&str, &str),
) -> String {
    let (xl, xh) = bounds(points.iter().map(|p| p.0).chain(vline));
    let (yl, yh) = bounds(points.iter().map(|p| p.1).chain([0.0]));
    let x = Axis::new(xl, xh, LEFT, W - RIGHT);
    let y = Axis::new(yl, yh, H - BOTTOM, TOP);
    let mut out = String::new();
    header(&mut out, W, H, title);
    axes(&mut out, &x, &y, xlabel, ylabel);
    let zero = y.map(0.0);
    writeln!(out, r#"<line x1="{LEFT}" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke="gray" stroke-dasharray="3,3"/>"#, W - RIGHT).unwrap();
    if let Some(v) = vline {
        let px = x.map(v);
        writeln!(out, r#"<line x1="{px:.1}" y1="{TOP}" x2="{px:.1}" y2="{:.1}" stroke="black" stroke-dasharray="5,3"/>"#, H - BOTTOM).unwrap();
    }
    for &(px, py, hl) in points {
        let c = if hl { PALETTE[1] } else { PALETTE[0] };
        writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{c}" fill-opacity="0.8"/>"#, x.map(px), y.map(py)).unwrap();
    }
    legend(&mut out, &[labels.1.to_string(), labels.0.to_string()]);
    out.push_str("</svg>\n");
    out
}

/// One polyline per series; `None` values break the line.
pub fn lines(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], series: &[(String, Vec<Option<f64>>)]) -> String {
    let (xl, xh) = bounds(xs.iter().copied());
    let (yl, yh) = bounds(series.iter().flat_map(|s| s.1.iter().flatten().copied()));
    let (yl, yh) = if yl.is_finite() { (yl.min(0.0), yh) } else { (0.0, 1.0) };
    let x = Axis::new(xl, xh, LEFT, W - RIGHT);
    let y = Axis::new(yl, yh, H - BOTTOM, TOP);
    let mut out = String::new();
    header(&mut out, W, H, title);
    axes(&mut out, &x, &y, xlabel, ylabel);
    for (si, (_, ys)) in series.iter().enumerate() {
        let c = PALETTE[si % PALETTE.len()];
        let mut pts = String::new();
        for (xv, yv) in xs.iter().zip(ys) {
            match yv {
                Some(v) => write!(pts, "{:.1},{:.1} ", x.map(*xv), y.map(*v)).unwrap(),
                None => {
                    if !pts.is_empty() {
                        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, pts.trim_end()).unwrap();
                        pts.clear();
                    }
                }
            }
        }
        if !pts.is_empty() {
            writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, pts.trim_end()).unwrap();
        }
    }
    legend(&mut out, &series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Vertical bars with optional ± error whiskers.
pub fn bars(title: &str, ylabel: &str, items: &[(String, f64, f64)]) -> String {
    let (_, yh) = bounds(items.iter().map(|i| i.1 + i.2));
    let yh = if yh.is_finite() && yh > 0.0 { yh } else { 1.0 };
    let y = Axis::new(0.0, yh, H - BOTTOM, TOP);
    let x = Axis::new(0.0, items.len().max(1) as f64, LEFT, W - RIGHT);
    let mut out = String::new();
    header(&mut out, W, H, title);
    writeln!(out, r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, H - BOTTOM, W - RIGHT, H - BOTTOM).unwrap();
    for t in y.ticks() {
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t:.3}</text>"#, LEFT - 5.0, y.map(t) + 4.0).unwrap();
    }
    writeln!(
        out,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    )
    .unwrap();
    let bw = (x.map(1.0) - x.map(0.0)) * 0.7;
    for (i, (name, v, se)) in items.iter().enumerate() {
        let cx = x.map(i as f64 + 0.5);
        let top = y.map(*v);
        writeln!(
            out,
            r#"<rect x="{:.1}" y="{top:.1}" width="{bw:.1}" height="{:.1}" fill="{}"/>"#,
            cx - bw / 2.0,
            (H - BOTTOM - top).max(0.0),
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
        if *se > 0.0 {
            writeln!(
                out,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y.map(v - se),
                y.map(v + se)
            )
            .unwrap();
        }
        writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, H - BOTTOM + 15.0, esc(name)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
