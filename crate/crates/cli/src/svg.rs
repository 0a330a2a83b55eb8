//! Minimal static line-chart writer.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 240.0;
const MARGIN: f64 = 40.0;

/// Renders `(x, y)` points as a single polyline with a frame, a zero line
/// and axis extents. Output is deterministic for identical input.
pub fn line_chart(title: &str, points: &[(f64, f64)]) -> String {
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    if y0 < 0.0 && y1 > 0.0 {
        let zy = sy(0.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN}" y1="{zy:.2}" x2="{:.2}" y2="{zy:.2}" stroke="#bbbbbb"/>"##,
            WIDTH - MARGIN
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(&mut svg, MARGIN - 4.0, MARGIN + 4.0, "end", format!("{y1:.2}"));
    label(&mut svg, MARGIN - 4.0, HEIGHT - MARGIN, "end", format!("{y0:.2}"));
    label(&mut svg, MARGIN, HEIGHT - MARGIN + 14.0, "start", format!("{x0:.3} s"));
    label(&mut svg, WIDTH - MARGIN, HEIGHT - MARGIN + 14.0, "end", format!("{x1:.3} s"));

    svg.push_str(r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points=""##);
    for (i, &(x, y)) in points.iter().enumerate() {
        if i > 0 {
            svg.push(' ');
        }
        let _ = write!(svg, "{:.2},{:.2}", sx(x), sy(y));
    }
    svg.push_str("\"/>\n</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
