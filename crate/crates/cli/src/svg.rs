//! Minimal SVG plots. Output depends only on the data, so reruns are byte-identical.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Self { lo: lo - pad, hi: hi + pad, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(1e-300).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                let v = if self.log { 10f64.powf(t) } else { t };
                (i as f64 / 4.0, format!("{v:.3}"))
            })
            .collect()
    }
}

fn sx(x: &Axis, v: f64) -> f64 {
    LEFT + x.frac(v) * (W - LEFT - RIGHT)
}

fn sy(y: &Axis, v: f64) -> f64 {
    H - BOTTOM - y.frac(v) * (H - TOP - BOTTOM)
}

fn frame(out: &mut String, title: &str, xlabel: &str, ylabel: &str, x: &Axis, y: &Axis) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    for (f, label) in x.ticks() {
        let px = x0 + f * (x1 - x0);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y1 + 4.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{label}</text>"#, y1 + 16.0);
    }
    for (f, label) in y.ticks() {
        let py = y1 - f * (y1 - y0);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 6.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        esc(ylabel)
    );
}

/// Scatter of `(x, y, highlighted)`; highlighted points are joined by a step line.
pub fn pareto_scatter(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64, bool)], log_x: bool) -> String {
    let x = Axis::fit(points.iter().map(|p| p.0), log_x);
    let y = Axis::fit(points.iter().map(|p| p.1), false);
    let mut out = String::new();
    frame(&mut out, title, xlabel, ylabel, &x, &y);
    let mut front: Vec<(f64, f64)> = points.iter().filter(|p| p.2 && p.1.is_finite()).map(|p| (p.0, p.1)).collect();
    front.sort_by(|a, b| a.0.total_cmp(&b.0));
    if front.len() > 1 {
        let mut d = String::new();
        for (i, (px, py)) in front.iter().enumerate() {
            let (cx, cy) = (sx(&x, *px), sy(&y, *py));
            if i == 0 {
                let _ = write!(d, "M{cx:.2},{cy:.2}");
            } else {
                let _ = write!(d, " H{cx:.2} V{cy:.2}");
            }
        }
        let _ = writeln!(out, r##"<path d="{d}" fill="none" stroke="#d62728" stroke-dasharray="4 3"/>"##);
    }
    for (px, py, hl) in points.iter().filter(|p| p.1.is_finite()) {
        let (fill, r) = if *hl { ("#d62728", 4.0) } else { ("#1f77b4", 3.0) };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}"/>"#, sx(&x, *px), sy(&y, *py));
    }
    out.push_str("</svg>\n");
    out
}

/// Line chart of named series; `band` draws a shaded `±band` region around zero.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)], band: Option<f64>) -> String {
    let all = || series.iter().flat_map(|s| s.1.iter());
    let x = Axis::fit(all().map(|p| p.0), false);
    let y = Axis::fit(all().map(|p| p.1).chain(band.into_iter().flat_map(|b| [b, -b])), false);
    let mut out = String::new();
    frame(&mut out, title, xlabel, ylabel, &x, &y);
    if let Some(b) = band {
        let (top, bot) = (sy(&y, b), sy(&y, -b));
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{top:.2}" width="{}" height="{:.2}" fill="#d62728" fill-opacity="0.12"/>"##,
            W - LEFT - RIGHT,
            bot - top
        );
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for (px, py) in pts {
            if !(px.is_finite() && py.is_finite()) {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, sx(&x, *px), sy(&y, *py));
            pen_up = false;
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, d.trim_end());
        let ly = TOP + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" text-anchor="end" fill="{color}">{}</text>"#,
            W - RIGHT - 6.0,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Table of node pairs with a bar per value; pruned rows are dashed and grey.
pub fn edge_table(title: &str, rows: &[(String, String, f64, bool)]) -> String {
    let row_h = 22.0;
    let height = 60.0 + row_h * rows.len() as f64;
    let max = rows.iter().map(|r| r.2).filter(|v| v.is_finite()).fold(0.0f64, f64::max).max(1e-300);
    let bar_x = 300.0;
    let bar_w = 240.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    for (i, (a, b, v, pruned)) in rows.iter().enumerate() {
        let y = 44.0 + row_h * i as f64;
        let (color, dash) = if *pruned { ("#999999", r#" stroke-dasharray="4 3""#) } else { ("#1f77b4", "") };
        let _ = writeln!(out, r#"<text x="20" y="{}">{} - {}</text>"#, y + 14.0, esc(a), esc(b));
        let w = if v.is_finite() { bar_w * v / max } else { 0.0 };
        let _ = writeln!(
            out,
            r#"<rect x="{bar_x}" y="{}" width="{w:.2}" height="{}" fill="{color}" fill-opacity="0.6" stroke="{color}"{dash}/>"#,
            y + 3.0,
            row_h - 8.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{v:.4e}</text>"#, bar_x + bar_w + 8.0, y + 14.0);
    }
    out.push_str("</svg>\n");
    out
}
