//! Standalone SVG scatter plots. Output depends only on the input data.

use std::fmt::Write as _;
use std::path::Path;

use crate::diag::{QQData, ResidualPlot};
use crate::error::{invalid, Result};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

pub enum PlotData<'a> {
    Qq(&'a QQData),
    Residual(&'a ResidualPlot),
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

pub fn render_svg(plot: &PlotData) -> Result<String> {
    let (title, xlab, ylab, points, reference, smooth) = match plot {
        PlotData::Qq(q) => {
            if q.pairs.is_empty() {
                return Err(invalid("no points to plot"));
            }
            let frame = Frame {
                x: (-1.05, 1.05),
                y: (-1.05, 1.05),
            };
            ("Residual QQ vs Uniform(-1, 1)", "Uniform(-1, 1) quantile".to_string(), "residual", (q.pairs.clone(), frame), ((-1.0, -1.0), (1.0, 1.0)), None)
        }
        PlotData::Residual(r) => {
            if r.points.is_empty() {
                return Err(invalid("no points to plot"));
            }
            let lo = r.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = r.points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            let frame = Frame {
                x: padded(lo, hi),
                y: (-1.05, 1.05),
            };
            let curve: Vec<(f64, f64)> = r.curve.x_grid.iter().copied().zip(r.curve.y_smooth.iter().copied()).collect();
            ("Residual by predictor", r.predictor.clone(), "residual", (r.points.clone(), frame), ((lo, 0.0), (hi, 0.0)), Some(curve))
        }
    };
    let (points, frame) = points;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{x0:.2},{y0:.2} V{y1:.2} H{x1:.2}" fill="none" stroke="black"/>"#
    );
    for (v, anchor) in [(frame.x.0, "start"), (frame.x.1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.2}</text>"#, frame.px(v), y1 + 16.0);
    }
    for v in [frame.y.0, frame.y.1] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, x0 - 4.0, frame.py(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0, escape(&xlab));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{ylab}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let (a, b) = reference;
    let _ = writeln!(
        s,
        r#"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        frame.px(a.0),
        frame.py(a.1),
        frame.px(b.0),
        frame.py(b.1)
    );
    let _ = writeln!(s, r#"<g class="points" fill="steelblue" fill-opacity="0.6">"#);
    for (px, py) in &points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, frame.px(*px), frame.py(*py));
    }
    let _ = writeln!(s, "</g>");
    if let Some(curve) = smooth {
        let coords: Vec<String> = curve
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="smooth" points="{}" fill="none" stroke="firebrick" stroke-width="2"/>"#,
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render(plot: &PlotData, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_svg(plot)?)?;
    Ok(())
}
