//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { lo.abs() * 0.05 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v.abs() < 0.01 && v != 0.0) {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Stacks panels vertically into one document.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let width = 720.0;
    let panel_h = 260.0;
    let top = 40.0;
    let height = top + panel_h * panels.len() as f64 + 10.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" style="fill:#ffffff"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" style="font-family:sans-serif;font-size:16px;text-anchor:middle">{}</text>"#,
        width / 2.0,
        escape(title)
    )
    .unwrap();

    for (k, panel) in panels.iter().enumerate() {
        let y0 = top + k as f64 * panel_h;
        let (left, right, ptop, pbottom) = (70.0, width - 170.0, y0 + 25.0, y0 + panel_h - 45.0);
        let (xmin, xmax) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (ymin, ymax) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * (right - left);
        let sy = |y: f64| pbottom - (y - ymin) / (ymax - ymin) * (pbottom - ptop);

        writeln!(
            s,
            r#"<text x="{}" y="{}" style="font-family:sans-serif;font-size:13px;text-anchor:middle">{}</text>"#,
            (left + right) / 2.0,
            y0 + 16.0,
            escape(&panel.title)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="{left}" y="{ptop}" width="{}" height="{}" style="fill:none;stroke:#444444;stroke-width:1"/>"#,
            right - left,
            pbottom - ptop
        )
        .unwrap();
        for t in 0..=4 {
            let fy = ymin + (ymax - ymin) * t as f64 / 4.0;
            let fx = xmin + (xmax - xmin) * t as f64 / 4.0;
            writeln!(
                s,
                r#"<line x1="{left}" y1="{y:.2}" x2="{right}" y2="{y:.2}" style="stroke:#dddddd;stroke-width:1"/><text x="{:.2}" y="{:.2}" style="font-family:sans-serif;font-size:10px;text-anchor:end">{}</text>"#,
                left - 4.0,
                sy(fy) + 3.0,
                fmt_tick(fy),
                y = sy(fy)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" style="font-family:sans-serif;font-size:10px;text-anchor:middle">{}</text>"#,
                sx(fx),
                pbottom + 14.0,
                fmt_tick(fx)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" style="font-family:sans-serif;font-size:11px;text-anchor:middle">{}</text>"#,
            (left + right) / 2.0,
            pbottom + 30.0,
            escape(&panel.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" style="font-family:sans-serif;font-size:11px;text-anchor:middle">{}</text>"#,
            (ptop + pbottom) / 2.0,
            (ptop + pbottom) / 2.0,
            escape(&panel.y_label)
        )
        .unwrap();

        for (i, series) in panel.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if series.dashed { ";stroke-dasharray:5,3" } else { "" };
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if !pts.is_empty() {
                writeln!(
                    s,
                    r#"<polyline points="{}" style="fill:none;stroke:{color};stroke-width:2{dash}"/>"#,
                    pts.join(" ")
                )
                .unwrap();
                for p in &pts {
                    let (x, y) = p.split_once(',').unwrap();
                    writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" style="fill:{color}"/>"#).unwrap();
                }
            }
            let ly = ptop + 12.0 + 16.0 * i as f64;
            writeln!(
                s,
                r#"<line x1="{}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" style="stroke:{color};stroke-width:2{dash}"/><text x="{}" y="{:.2}" style="font-family:sans-serif;font-size:11px">{}</text>"#,
                right + 10.0,
                right + 30.0,
                right + 35.0,
                ly + 4.0,
                escape(&series.name)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
