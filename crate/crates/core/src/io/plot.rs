use std::fmt::Write;

use crate::engine::EpisodeRow;
use crate::geometry::Outcome;

const RED: &str = "#c62828";
const BLUE: &str = "#1565c0";

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub width: f64,
    pub height: f64,
    pub title: String,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            width: 1000.0,
            height: 480.0,
            title: "Engagement".into(),
        }
    }
}

/// Axis-aligned data window mapped onto a pixel rectangle.
struct Frame {
    px: (f64, f64, f64, f64),
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(px: (f64, f64, f64, f64), xs: &[f64], ys: &[f64], equal_aspect: bool) -> Self {
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1.0 {
                let mid = 0.5 * (lo + hi);
                (mid - 0.5, mid + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (mut x, mut y) = (span(xs), span(ys));
        let pad = |r: (f64, f64)| {
            let m = 0.05 * (r.1 - r.0);
            (r.0 - m, r.1 + m)
        };
        x = pad(x);
        y = pad(y);
        if equal_aspect {
            let (w, h) = (px.2 - px.0, px.3 - px.1);
            let scale = ((x.1 - x.0) / w).max((y.1 - y.0) / h);
            let cx = 0.5 * (x.0 + x.1);
            let cy = 0.5 * (y.0 + y.1);
            x = (cx - 0.5 * w * scale, cx + 0.5 * w * scale);
            y = (cy - 0.5 * h * scale, cy + 0.5 * h * scale);
        }
        Self { px, x, y }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, y0, x1, y1) = self.px;
        (
            x0 + (x - self.x.0) / (self.x.1 - self.x.0) * (x1 - x0),
            y1 - (y - self.y.0) / (self.y.1 - self.y.0) * (y1 - y0),
        )
    }
}

fn panel(svg: &mut String, id: &str, label: &str, frame: &Frame, traces: [(&[(f64, f64)], &str); 2]) {
    let (x0, y0, x1, y1) = frame.px;
    let _ = writeln!(svg, r#"<g id="{id}">"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="gray"/>"#,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{label}</text>"#,
        0.5 * (x0 + x1),
        y0 - 8.0
    );
    for (pts, color) in traces {
        if pts.len() >= 2 {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| {
                    let (u, v) = frame.map(x, y);
                    format!("{u:.2},{v:.2}")
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        if let Some(&(x, y)) = pts.first() {
            let (u, v) = frame.map(x, y);
            let _ = writeln!(svg, r#"<circle cx="{u:.2}" cy="{v:.2}" r="4" fill="{color}"/>"#);
        }
    }
    let _ = writeln!(svg, "</g>");
}

/// Renders a trajectory as a standalone SVG: a top-down (x, y) panel and an
/// altitude-versus-time panel, red and blue traces, start markers and the
/// outcome.
pub fn render_svg(rows: &[EpisodeRow], outcome: Option<Outcome>, opts: &PlotOptions) -> String {
    let (w, h) = (opts.width, opts.height);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" font-size="16" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(&opts.title)
    );

    let red_xy: Vec<(f64, f64)> = rows.iter().map(|r| (r.red.x, r.red.y)).collect();
    let blue_xy: Vec<(f64, f64)> = rows.iter().map(|r| (r.blue.x, r.blue.y)).collect();
    let red_tz: Vec<(f64, f64)> = rows.iter().map(|r| (r.t_s, r.red.z)).collect();
    let blue_tz: Vec<(f64, f64)> = rows.iter().map(|r| (r.t_s, r.blue.z)).collect();

    let margin = 50.0;
    let mid = w / 2.0;
    let top = 60.0;
    let bottom = h - 60.0;
    if !rows.is_empty() {
        let xs: Vec<f64> = red_xy.iter().chain(&blue_xy).map(|p| p.0).collect();
        let ys: Vec<f64> = red_xy.iter().chain(&blue_xy).map(|p| p.1).collect();
        let top_down = Frame::new((margin, top, mid - margin / 2.0, bottom), &xs, &ys, true);
        panel(&mut svg, "top-down", "Top-down track (x east, y north)", &top_down, [(&red_xy, RED), (&blue_xy, BLUE)]);

        let ts: Vec<f64> = red_tz.iter().map(|p| p.0).collect();
        let zs: Vec<f64> = red_tz.iter().chain(&blue_tz).map(|p| p.1).collect();
        let alt = Frame::new((mid + margin / 2.0, top, w - margin, bottom), &ts, &zs, false);
        panel(&mut svg, "altitude", "Altitude vs time", &alt, [(&red_tz, RED), (&blue_tz, BLUE)]);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">t = 0 .. {:.2} s, z = {:.0} .. {:.0} m</text>"#,
            0.5 * (mid + w),
            bottom + 18.0,
            alt.x.1.max(0.0),
            alt.y.0,
            alt.y.1
        );
    }

    let result = match outcome {
        Some(o) => format!("Outcome: {o} after {} steps", rows.len().saturating_sub(1)),
        None => format!("{} steps", rows.len().saturating_sub(1)),
    };
    let _ = writeln!(
        svg,
        r#"<text x="{margin}" y="{}" font-size="13">{}</text>"#,
        h - 20.0,
        escape(&result)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" fill="{RED}">red</text><text x="{}" y="{}" font-size="13" fill="{BLUE}">blue</text>"#,
        w - 120.0,
        h - 20.0,
        w - 80.0,
        h - 20.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
