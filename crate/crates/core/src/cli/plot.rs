//! SVG 1.1 line charts of regret against one sweep axis.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::harness::{Axis, CsvRow};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 260.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Points of one configuration, sorted by the x value.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn x_value(row: &CsvRow, axis: Axis) -> Result<f64> {
    Ok(match axis {
        Axis::T => row.t as f64,
        Axis::K => row.k as f64,
        Axis::Epsilon => row.epsilon,
        Axis::DeltaMin => {
            return Err(Error::InvalidArgument(
                "delta_min is not a CSV column".into(),
            ))
        }
    })
}

fn label(row: &CsvRow, axis: Axis) -> String {
    let mut parts = Vec::new();
    if axis != Axis::K {
        parts.push(row.instance.clone());
    }
    parts.push(format!("B={}", row.b));
    parts.push(row.noise.clone());
    if axis != Axis::Epsilon && row.noise != "none" {
        parts.push(format!("eps={}", row.epsilon));
    }
    if axis != Axis::T {
        parts.push(format!("T={}", row.t));
    }
    parts.join(" ")
}

/// Groups rows into series by every configuration column except `axis`,
/// in order of first appearance.
pub fn group_series(rows: &[CsvRow], axis: Axis) -> Result<Vec<Series>> {
    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        let name = label(row, axis);
        let point = (x_value(row, axis)?, row.regret_mean);
        match series.iter_mut().find(|s| s.label == name) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                label: name,
                points: vec![point],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64> + Clone, log: bool, from: f64, to: f64) -> Self {
        let tf = |v: f64| if log { v.log10() } else { v };
        let lo = values.clone().map(tf).fold(f64::INFINITY, f64::min);
        let hi = values.map(tf).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        Scale {
            lo,
            hi,
            log,
            from,
            to,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * f64::from(i) / 4.0;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders one polyline per series with axes, ticks and a legend. The x axis
/// is logarithmic when its values are positive and span two decades.
pub fn render_svg(rows: &[CsvRow], axis: Axis) -> Result<String> {
    let series = group_series(rows, axis)?;
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    if xs.clone().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite {} values cannot be plotted",
            axis.name()
        )));
    }
    let x_min = xs.clone().fold(f64::INFINITY, f64::min);
    let x_max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    let log_x = x_min > 0.0 && x_max / x_min >= 100.0;
    let x_scale = Scale::new(xs, log_x, LEFT, WIDTH - RIGHT);
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .chain(std::iter::once(0.0));
    let y_scale = Scale::new(ys, false, HEIGHT - BOTTOM, TOP);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(svg, "</g>");
    for t in x_scale.ticks() {
        let x = x_scale.map(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 20.0,
            tick_label(t)
        );
    }
    for t in y_scale.ticks() {
        let y = y_scale.map(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let x_title = if log_x {
        format!("{} (log scale)", axis.name())
    } else {
        axis.name().to_string()
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        x_title
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">pseudoregret</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", x_scale.map(x), y_scale.map(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                x_scale.map(x),
                y_scale.map(y)
            );
        }
    }
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}
