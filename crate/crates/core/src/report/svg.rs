//! Minimal deterministic SVG line/scatter charts.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const WIDTH: f64 = 900.0;
pub const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Tableau 10.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Dashed,
    Points,
    /// Unfilled markers, used for held-out points.
    HollowPoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical marker, typically the emergence threshold.
    pub marker: Option<f64>,
}

impl ChartSpec {
    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::Validation("chart needs at least one series".into()));
        }
        for s in &self.series {
            if s.points.is_empty() {
                return Err(Error::Validation(format!("series {:?} is empty", s.label)));
            }
            if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(Error::Validation(format!("series {:?} has a non-finite point", s.label)));
            }
        }
        if self.marker.is_some_and(|m| !m.is_finite()) {
            return Err(Error::Validation("non-finite marker position".into()));
        }
        Ok(())
    }
}

/// Round step (1, 2 or 5 times a power of ten) giving about `target` intervals.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub ticks: Vec<f64>,
}

impl Axis {
    fn fit(lo: f64, hi: f64) -> Self {
        let (lo, hi) = if hi - lo <= 0.0 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        let step = nice_step(hi - lo, 5.0);
        let first = (lo / step).floor() as i64;
        let last = (hi / step).ceil() as i64;
        let ticks = (first..=last)
            .map(|k| {
                let v = k as f64 * step;
                if v.abs() < step * 1e-9 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        Self {
            min: first as f64 * step,
            max: last as f64 * step,
            step,
            ticks,
        }
    }

    fn label(&self, v: f64) -> String {
        let decimals = (-self.step.log10().floor()).max(0.0) as usize;
        format!("{v:.decimals$}")
    }
}

/// Data-to-pixel mapping of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartLayout {
    pub x: Axis,
    pub y: Axis,
}

impl ChartLayout {
    pub fn new(spec: &ChartSpec) -> Self {
        let xs = spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).chain(spec.marker);
        let ys = spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let range = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        };
        let (x0, x1) = range(&mut xs.into_iter());
        let (y0, y1) = range(&mut ys.into_iter());
        Self {
            x: Axis::fit(x0, x1),
            y: Axis::fit(y0, y1),
        }
    }

    pub fn x_px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.min) / (self.x.max - self.x.min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    pub fn y_px(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.min) / (self.y.max - self.y.min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Renders the chart. Output depends only on `spec`.
pub fn render_svg(spec: &ChartSpec) -> Result<String> {
    spec.validate()?;
    let layout = ChartLayout::new(spec);
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let mut s = String::new();
    // writes into a String cannot fail
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#,
        W = WIDTH,
        H = HEIGHT
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        px((left + right) / 2.0),
        escape(&spec.title)
    );

    let _ = writeln!(s, r##"<g stroke="#dddddd" stroke-width="1">"##);
    for &t in &layout.x.ticks {
        let x = px(layout.x_px(t));
        let _ = writeln!(s, r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}"/>"#, px(top), px(bottom));
    }
    for &t in &layout.y.ticks {
        let y = px(layout.y_px(t));
        let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}"/>"#, px(left), px(right));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px(left),
        px(top),
        px(right - left),
        px(bottom - top)
    );
    for &t in &layout.x.ticks {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(layout.x_px(t)),
            px(bottom + 18.0),
            layout.x.label(t)
        );
    }
    for &t in &layout.y.ticks {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            px(left - 6.0),
            px(layout.y_px(t) + 4.0),
            layout.y.label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        px((left + right) / 2.0),
        px(HEIGHT - 16.0),
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        escape(&spec.y_label),
        y = px((top + bottom) / 2.0)
    );

    if let Some(m) = spec.marker {
        let x = px(layout.x_px(m));
        let _ = writeln!(
            s,
            r#"<line class="marker" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-dasharray="4 4"/>"#,
            px(top),
            px(bottom)
        );
    }

    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-label="{}">"#, escape(&series.label));
        match series.style {
            SeriesStyle::Line | SeriesStyle::Dashed => {
                let pts: Vec<String> = series
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{},{}", px(layout.x_px(x)), px(layout.y_px(y))))
                    .collect();
                let dash = if series.style == SeriesStyle::Dashed {
                    r#" stroke-dasharray="8 4""#
                } else {
                    ""
                };
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                    pts.join(" ")
                );
            }
            SeriesStyle::Points | SeriesStyle::HollowPoints => {
                let fill = if series.style == SeriesStyle::Points { color } else { "white" };
                for &(x, y) in &series.points {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{}" cy="{}" r="3.5" fill="{fill}" stroke="{color}" stroke-width="1.5"/>"#,
                        px(layout.x_px(x)),
                        px(layout.y_px(y))
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let lx = right + 16.0;
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = top + 10.0 + 20.0 * i as f64;
        let _ = write!(s, r#"<g class="legend">"#);
        match series.style {
            SeriesStyle::Line | SeriesStyle::Dashed => {
                let _ = write!(
                    s,
                    r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
                    px(lx),
                    px(y),
                    px(lx + 20.0),
                    px(y)
                );
            }
            SeriesStyle::Points | SeriesStyle::HollowPoints => {
                let fill = if series.style == SeriesStyle::Points { color } else { "white" };
                let _ = write!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="3.5" fill="{fill}" stroke="{color}" stroke-width="1.5"/>"#,
                    px(lx + 10.0),
                    px(y)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text></g>"#,
            px(lx + 26.0),
            px(y + 4.0),
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
