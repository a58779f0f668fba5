//! Self-contained SVG line charts and an orthographic Bloch-sphere view.

use std::fmt::Write;

use nalgebra::Vector3;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Series<'a> {
    pub label: &'a str,
    /// `None` breaks the line.
    pub points: Vec<(f64, Option<f64>)>,
}

fn bounds<I: Iterator<Item = f64>>(it: I) -> (f64, f64) {
    let (lo, hi) = it
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        let pad = lo.abs().max(1.0) * 0.5;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// A line chart of one or more series sharing the x axis.
pub fn line_chart(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"##,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r##"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"##
    );
    let _ = writeln!(
        out,
        r##"<text x="{left}" y="{}" text-anchor="middle">{x0:.3}</text>"##,
        bottom + 16.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{right}" y="{}" text-anchor="middle">{x1:.3}</text>"##,
        bottom + 16.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
        WIDTH / 2.0,
        bottom + 34.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{bottom}" text-anchor="end">{y0:.3e}</text>"##,
        left - 4.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" text-anchor="end">{y1:.3e}</text>"##,
        left - 4.0,
        top + 4.0
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            match y {
                Some(y) if y.is_finite() && x.is_finite() => {
                    let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                out,
                r##"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"##,
                d.trim_end()
            );
        }
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" fill="{color}">{}</text>"##,
            right - 120.0,
            top + 14.0 * k as f64,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Orthographic view of the unit sphere from azimuth -35° and elevation 20°,
/// with the orbit drawn over the silhouette and equator.
pub fn bloch_orbit(title: &str, orbit: &[Vector3<f64>]) -> String {
    let (az, el) = (-35f64.to_radians(), 20f64.to_radians());
    let project = |p: &Vector3<f64>| {
        let x = p.x * az.cos() - p.y * az.sin();
        let y = p.x * az.sin() + p.y * az.cos();
        let up = p.z * el.cos() - y * el.sin();
        let depth = p.z * el.sin() + y * el.cos();
        (x, up, depth)
    };
    let size = 400.0;
    let r = 160.0;
    let c = size / 2.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" viewBox="0 0 {size} {}" font-family="sans-serif" font-size="12">"##,
        size + 20.0,
        size + 20.0
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{c}" y="16" text-anchor="middle" font-size="14">{}</text>"##,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{c}" cy="{}" r="{r}" fill="none" stroke="#999"/>"##,
        c + 20.0
    );

    let to_screen = |(x, up, _): (f64, f64, f64)| (c + r * x, c + 20.0 - r * up);
    let mut equator = String::new();
    for k in 0..=96 {
        let phi = k as f64 / 96.0 * std::f64::consts::TAU;
        let (x, y) = to_screen(project(&Vector3::new(phi.cos(), phi.sin(), 0.0)));
        let _ = write!(equator, "{}{x:.2} {y:.2} ", if k == 0 { "M" } else { "L" });
    }
    let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#ccc"/>"##, equator.trim_end());
    for (label, axis) in [("x", Vector3::x()), ("y", Vector3::y()), ("z", Vector3::z())] {
        let (x, y) = to_screen(project(&(axis * 1.08)));
        let _ = writeln!(out, r##"<text x="{x:.2}" y="{y:.2}" fill="#666">{label}</text>"##);
    }

    // split the orbit into front and back runs so hidden parts render faded
    let mut runs: Vec<(bool, String)> = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for p in orbit.iter().filter(|p| p.iter().all(|x| x.is_finite())) {
        let q = project(p);
        let front = q.2 <= 0.0;
        let (x, y) = to_screen(q);
        match runs.last_mut() {
            Some((f, d)) if *f == front => {
                let _ = write!(d, "L{x:.2} {y:.2} ");
            }
            _ => {
                // start each run at the previous point so the line stays joined
                let (x0, y0) = last.unwrap_or((x, y));
                runs.push((front, format!("M{x0:.2} {y0:.2} L{x:.2} {y:.2} ")));
            }
        }
        last = Some((x, y));
    }
    for (front, d) in runs {
        let opacity = if front { 1.0 } else { 0.35 };
        let _ = writeln!(
            out,
            r##"<path d="{}" fill="none" stroke="#1f77b4" stroke-opacity="{opacity}" stroke-width="1.2"/>"##,
            d.trim_end()
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_breaks_lines_at_gaps_and_escapes_text() {
        let s = Series {
            label: "κ² <bloch>",
            points: vec![(0.0, Some(1.0)), (1.0, None), (2.0, Some(2.0)), (3.0, Some(1.5))],
        };
        let svg = line_chart("a & b", "t", &[s]);
        assert!(svg.contains("a &amp; b"));
        assert!(svg.contains("&lt;bloch&gt;"));
        let line = svg.lines().find(|l| l.contains("stroke-width")).unwrap();
        assert_eq!(line.matches('M').count(), 2);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn orbit_view_has_faded_back_half() {
        let orbit: Vec<_> = (0..200)
            .map(|k| {
                let p = k as f64 / 200.0 * std::f64::consts::TAU;
                Vector3::new(p.cos(), p.sin(), 0.0)
            })
            .collect();
        let svg = bloch_orbit("orbit", &orbit);
        assert!(svg.contains("stroke-opacity=\"0.35\""));
        assert!(svg.contains("stroke-opacity=\"1\""));
    }
}
