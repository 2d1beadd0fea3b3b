//! Minimal self-contained SVG line plots.

use std::fmt::Write as _;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Palette slot; series sharing a slot share a colour.
    pub color: usize,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: usize) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
            color,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn transform(v: f64, log: bool) -> Option<f64> {
    if log {
        (v > 0.0 && v.is_finite()).then(|| v.log10())
    } else {
        v.is_finite().then_some(v)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{:.3}", v);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        let step = ((b - a) / 6).max(1);
        return (a..=b).step_by(step as usize).map(|e| e as f64).collect();
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-9 * step {
        out.push(if v.abs() < 1e-12 * step { 0.0 } else { v });
        v += step;
    }
    out
}

fn render_panel(out: &mut String, plot: &Plot, ox: f64, oy: f64) {
    let pts = || {
        plot.series.iter().flat_map(|s| {
            s.points
                .iter()
                .filter_map(|&(x, y)| Some((transform(x, plot.log_x)?, transform(y, plot.log_y)?)))
        })
    };
    let (x0, x1) = bounds(pts().map(|p| p.0));
    let (y0, y1) = bounds(pts().map(|p| p.1));
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let (left, top) = (ox + MARGIN_L, oy + MARGIN_T);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * w;
    let sy = |y: f64| top + h - (y - y0) / (y1 - y0) * h;

    let _ = writeln!(
        out,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="dimgray"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        left + w / 2.0,
        oy + 18.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
        left + w / 2.0,
        oy + PANEL_H - 6.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        ox + 14.0,
        top + h / 2.0,
        ox + 14.0,
        top + h / 2.0,
        escape(&plot.y_label)
    );
    for t in ticks(x0, x1, plot.log_x) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            sx(t),
            top + h + 14.0,
            tick_label(t, plot.log_x)
        );
    }
    for t in ticks(y0, y1, plot.log_y) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            left - 4.0,
            sy(t) + 3.0,
            tick_label(t, plot.log_y)
        );
    }
    for (i, s) in plot.series.iter().enumerate() {
        let color = PALETTE[s.color % PALETTE.len()];
        // NaN breaks a polyline into separate pieces
        let mut pieces: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &s.points {
            match (transform(x, plot.log_x), transform(y, plot.log_y)) {
                (Some(x), Some(y)) => pieces.last_mut().unwrap().push((sx(x), sy(y))),
                _ => pieces.push(Vec::new()),
            }
        }
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        for piece in pieces.iter().filter(|p| !p.is_empty()) {
            let coords: Vec<String> = piece
                .iter()
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.4"{dash} points="{}"/>"#,
                coords.join(" ")
            );
        }
        if !s.label.is_empty() {
            let ly = top + 12.0 + 13.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" font-size="10" fill="{color}">{}</text>"#,
                left + w - 6.0,
                escape(&s.label)
            );
        }
    }
}

/// Panels laid out row-major, `columns` per row.
pub fn render(panels: &[Plot], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let (width, height) = (PANEL_W * columns as f64, PANEL_H * rows as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    for (i, p) in panels.iter().enumerate() {
        let ox = PANEL_W * (i % columns) as f64;
        let oy = PANEL_H * (i / columns) as f64;
        render_panel(&mut out, p, ox, oy);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_is_well_formed() {
        let p = Plot::new("a < b", "x", "y")
            .with(Series::new("line", vec![(0.0, 1.0), (1.0, 2.0)], 0))
            .with(Series::new("", vec![(0.0, f64::NAN), (1.0, 0.0)], 1).dashed());
        let svg = render(&[p.clone(), p], 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches('<').count(), svg.matches('>').count());
    }

    #[test]
    fn log_axes_skip_nonpositive_points() {
        let p = Plot::new("", "x", "y").log_log().with(Series::new(
            "s",
            vec![(1.0, 1.0), (10.0, 0.0), (100.0, 1e-3)],
            0,
        ));
        let svg = render(&[p], 1);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(
            ticks(0.0, 1.0, false),
            vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]
        );
        assert_eq!(ticks(-3.2, 0.5, true), vec![-3.0, -2.0, -1.0, 0.0]);
    }
}
