//! Minimal standalone SVG charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn fit<'a>(series: impl Iterator<Item = (&'a [f64], &'a [f64])>) -> Self {
        let mut f =
            Frame { x_min: f64::INFINITY, x_max: f64::NEG_INFINITY, y_min: f64::INFINITY, y_max: f64::NEG_INFINITY };
        for (xs, ys) in series {
            for (&x, &y) in xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()) {
                f.x_min = f.x_min.min(x);
                f.x_max = f.x_max.max(x);
                f.y_min = f.y_min.min(y);
                f.y_max = f.y_max.max(y);
            }
        }
        if !f.x_min.is_finite() {
            (f.x_min, f.x_max, f.y_min, f.y_max) = (0.0, 1.0, 0.0, 1.0);
        }
        if f.x_max == f.x_min {
            f.x_max = f.x_min + 1.0;
        }
        if f.y_max == f.y_min {
            f.y_max = f.y_min + 1.0;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let (xp, yp) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(out, r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick(xv));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, yp + 4.0, tick(yv));
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per `(label, xs, ys)` series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(&str, &[f64], &[f64])]) -> String {
    let frame = Frame::fit(series.iter().map(|(_, x, y)| (*x, *y)));
    let mut out = String::new();
    header(&mut out, title, x_label, y_label, &frame);
    for (k, (label, xs, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            MARGIN + 14.0 * k as f64,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let frame = Frame::fit(std::iter::once((xs, ys)));
    let mut out = String::new();
    header(&mut out, title, x_label, y_label, &frame);
    for (&x, &y) in xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let _ =
            writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#, frame.px(x), frame.py(y), COLORS[0]);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let xs = [0.0, 0.5, 1.0];
        let ys = [1.0, 0.2, f64::NAN];
        let svg = line_chart("a < b", "x", "y", &[("s", &xs, &ys)]);
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let dots = scatter_chart("t", "x", "y", &xs, &ys);
        assert_eq!(dots.matches("<circle").count(), 2);
        // constant data must not divide by zero
        let flat = scatter_chart("t", "x", "y", &[1.0], &[1.0]);
        assert!(!flat.contains("NaN"));
    }
}
