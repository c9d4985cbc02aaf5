//! Minimal self-contained SVG writers for report figures. No dependencies;
//! enough for a line chart per arm and a grid heatmap.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 140.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn finite_bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
    }
    if xs.0 > xs.1 || ys.0 > ys.1 {
        return None;
    }
    let pad = ((ys.1 - ys.0).abs()).max(1e-9) * 0.05;
    Some((xs.0, xs.1.max(xs.0 + 1e-9), ys.0 - pad, ys.1 + pad))
}

/// A line chart with one polyline per series and a side legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    );
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let Some((x0, x1, y0, y1)) = finite_bounds(series) else {
        let _ = write!(out, "</svg>");
        return out;
    };
    let sx = move |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
    let sy = move |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    // Axes with min/max ticks.
    let _ = write!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>"##
    );
    let _ = write!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = write!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{v:.0}</text>"#,
            sx(v),
            HEIGHT - MARGIN_B + 16.0
        );
    }
    for v in [y0, y1] {
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#,
            MARGIN_L - 6.0,
            sy(v) + 4.0
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !path.is_empty() {
            let _ = write!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = write!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            s.label
        );
    }
    let _ = write!(out, "</svg>");
    out
}

/// A square heatmap over a unit grid; `cells[i][j]` is the value at
/// (x_i, y_j), NaN cells are left white.
pub fn heatmap(title: &str, xs: &[f64], ys: &[f64], cells: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    );
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in cells {
        for &v in row {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if lo > hi {
        let _ = write!(out, "</svg>");
        return out;
    }
    let span = (hi - lo).max(1e-12);
    let cw = plot_w / xs.len() as f64;
    let ch = plot_h / ys.len() as f64;
    for (i, _) in xs.iter().enumerate() {
        for (j, _) in ys.iter().enumerate() {
            let v = cells[i][j];
            if !v.is_finite() {
                continue;
            }
            let t = (v - lo) / span;
            // Blue (low) to red (high) through white.
            let (r, g, b) = if t < 0.5 {
                let u = t * 2.0;
                ((255.0 * u) as u8, (255.0 * u) as u8, 255)
            } else {
                let u = (1.0 - t) * 2.0;
                (255, (255.0 * u) as u8, (255.0 * u) as u8)
            };
            let x = MARGIN_L + i as f64 * cw;
            let y = MARGIN_T + plot_h - (j as f64 + 1.0) * ch;
            let _ = write!(
                out,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"##,
                cw + 0.5,
                ch + 0.5
            );
        }
    }
    let _ = write!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/><text x="{}" y="{}" text-anchor="middle">p0</text><text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">p1</text><text x="{}" y="{}" text-anchor="start">[{lo:.3}, {hi:.3}]</text>"##,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        WIDTH - MARGIN_R + 12.0,
        MARGIN_T + 12.0
    );
    let _ = write!(out, "</svg>");
    out
}
