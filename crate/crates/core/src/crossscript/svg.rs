//! Minimal hand-written SVG for the proximity panels and box plots.

use std::f64::consts::PI;
use std::fmt::Write;

use super::{FMeasureMatrix, ScriptBox};

const PANEL: f64 = 220.0;
const RADIUS: f64 = 80.0;

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<!-- scriptdet {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One panel per training script. Each other script gets an axis whose
/// length shrinks as the f-measure grows, so the closest scripts sit on
/// the shortest axes. Red marks reach `close`, green marks reach `loose`.
pub fn proximity_svg(m: &FMeasureMatrix, close: f64, loose: f64) -> String {
    let n = m.len();
    let cols = n.clamp(1, 4);
    let rows = n.div_ceil(cols);
    let mut out = String::new();
    header(&mut out, PANEL * cols as f64, PANEL * rows as f64);

    for (i, name) in m.scripts().iter().enumerate() {
        let cx = PANEL * (i % cols) as f64 + PANEL / 2.0;
        let cy = PANEL * (i / cols) as f64 + PANEL / 2.0;
        let _ = writeln!(out, r#"<g id="panel-{}">"#, escape(name));
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-weight="bold">{}</text>"#,
            cy - RADIUS - 18.0,
            escape(name)
        );
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        for (k, &j) in others.iter().enumerate() {
            let theta = 2.0 * PI * k as f64 / others.len() as f64 - PI / 2.0;
            let (dx, dy) = (theta.cos(), theta.sin());
            let _ = writeln!(
                out,
                r##"<line x1="{cx:.2}" y1="{cy:.2}" x2="{:.2}" y2="{:.2}" stroke="#00bcd4" stroke-width="1"/>"##,
                cx + RADIUS * dx,
                cy + RADIUS * dy
            );
            let Some(f) = m.get(i, j) else { continue };
            let len = RADIUS * (1.0 - f).max(0.05);
            let (px, py) = (cx + len * dx, cy + len * dy);
            let colour = if f >= close {
                "#d32f2f"
            } else if f >= loose {
                "#388e3c"
            } else {
                "#9e9e9e"
            };
            let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{colour}"/>"#);
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} {f:.2}</text>"#,
                cx + (RADIUS + 12.0) * dx,
                cy + (RADIUS + 12.0) * dy + 4.0,
                escape(&m.scripts()[j])
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

/// Horizontal box plots on a [0, 1] axis, one row per script, with the
/// mean drawn as a red tick.
pub fn box_plot_svg(title: &str, boxes: &[ScriptBox]) -> String {
    let (left, right, top, row_h) = (90.0, 20.0, 40.0, 32.0);
    let plot_w = 400.0;
    let width = left + plot_w + right;
    let height = top + row_h * boxes.len() as f64 + 40.0;
    let x = |v: f64| left + plot_w * v.clamp(0.0, 1.0);

    let mut out = String::new();
    header(&mut out, width, height);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-weight="bold">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    let axis_y = top + row_h * boxes.len() as f64;
    let _ = writeln!(
        out,
        r#"<line x1="{left}" y1="{axis_y}" x2="{:.2}" y2="{axis_y}" stroke="black"/>"#,
        left + plot_w
    );
    for t in 0..=10 {
        let v = t as f64 / 10.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"#,
            x(v),
            axis_y + 16.0
        );
    }

    for (r, b) in boxes.iter().enumerate() {
        let s = &b.stats;
        let mid = top + row_h * r as f64 + row_h / 2.0;
        let half = row_h * 0.3;
        let _ = writeln!(out, r#"<g id="box-{}">"#, escape(&b.script));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 8.0,
            mid + 4.0,
            escape(&b.script)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{mid:.2}" x2="{:.2}" y2="{mid:.2}" stroke="black"/>"#,
            x(s.whisker_low),
            x(s.whisker_high)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
            x(s.q1),
            mid - half,
            x(s.q3) - x(s.q1),
            2.0 * half
        );
        let _ = writeln!(
            out,
            r#"<line x1="{m:.2}" y1="{:.2}" x2="{m:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            mid - half,
            mid + half,
            m = x(s.median)
        );
        let _ = writeln!(
            out,
            r#"<line class="mean" x1="{m:.2}" y1="{:.2}" x2="{m:.2}" y2="{:.2}" stroke="red" stroke-width="2"/>"#,
            mid - half - 3.0,
            mid + half + 3.0,
            m = x(s.mean)
        );
        for o in &s.outliers {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{mid:.2}" r="3" fill="none" stroke="black"><title>{}</title></circle>"#,
                x(o.value),
                escape(&o.label)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
