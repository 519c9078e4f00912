//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
/// Series longer than this are decimated before drawing.
const MAX_POINTS: usize = 4000;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal dashed lines: label and y value.
    pub reference_lines: Vec<(String, f64)>,
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn series(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        let color = PALETTE[self.series.len() % PALETTE.len()].to_string();
        self.series.push(Series { label: label.into(), color, points });
        self
    }

    pub fn reference(mut self, label: impl Into<String>, y: f64) -> Self {
        self.reference_lines.push((label.into(), y));
        self
    }

    fn ty(&self, y: f64) -> Option<f64> {
        if !y.is_finite() {
            return None;
        }
        if self.log_y {
            (y > 0.0).then(|| y.log10())
        } else {
            Some(y)
        }
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| x.is_finite());
        let (mut x0, mut x1) = min_max(xs).unwrap_or((0.0, 1.0));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.reference_lines.iter().map(|r| r.1))
            .filter_map(|y| self.ty(y));
        let (mut y0, mut y1) = min_max(ys).unwrap_or((0.0, 1.0));
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
            y0 -= pad;
            y1 += pad;
        }
        if !self.log_y {
            let pad = (y1 - y0) * 0.05;
            y0 -= pad;
            y1 += pad;
        }
        x0 = x0.min(x1);
        ((x0, x1), (y0, y1))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        // grid and ticks
        for x in linear_ticks(x0, x1) {
            let px = sx(x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e5e5e5"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 18.0,
                fmt_tick(x)
            );
        }
        let yticks: Vec<(f64, String)> = if self.log_y {
            log_ticks(y0, y1).into_iter().map(|v| (v.log10(), fmt_tick(v))).collect()
        } else {
            linear_ticks(y0, y1).into_iter().map(|v| (v, fmt_tick(v))).collect()
        };
        for (ty, label) in yticks {
            let py = sy(ty);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let _ = writeln!(s, r#"<g clip-path="inset(0)">"#);
        for series in &self.series {
            let step = series.points.len().div_ceil(MAX_POINTS).max(1);
            let mut path = String::new();
            for (k, &(x, y)) in series.points.iter().enumerate() {
                if k % step != 0 && k + 1 != series.points.len() {
                    continue;
                }
                if let Some(ty) = self.ty(y) {
                    let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(ty));
                }
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.6" points="{}"/>"#,
                series.color,
                path.trim_end()
            );
        }
        for (label, y) in &self.reference_lines {
            if let Some(ty) = self.ty(*y) {
                let py = sy(ty);
                let _ = writeln!(
                    s,
                    r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#000" stroke-dasharray="6,4"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
                    LEFT + pw,
                    LEFT + pw - 4.0,
                    py - 4.0,
                    escape(label)
                );
            }
        }
        let _ = writeln!(s, "</g>");

        // legend
        let lx = LEFT + pw + 14.0;
        for (k, series) in self.series.iter().enumerate() {
            let ly = TOP + 10.0 + 20.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 22.0,
                series.color,
                lx + 28.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    it.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + step * 1e-9 {
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

/// Tick values (linear domain) for a log10 range.
fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (d0, d1) = (lo.floor() as i32, hi.ceil() as i32);
    let mults: &[f64] = if d1 - d0 <= 2 { &[1.0, 2.0, 5.0] } else { &[1.0] };
    let stride = ((d1 - d0) / 8).max(1);
    let mut out = Vec::new();
    let mut d = d0;
    while d <= d1 {
        for m in mults {
            let v = m * 10f64.powi(d);
            let lv = v.log10();
            if lv >= lo - 1e-9 && lv <= hi + 1e-9 {
                out.push(v);
            }
        }
        d += stride;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_self_contained_svg() {
        let svg = LinePlot::new("beliefs <test>", "round", "belief")
            .log_y()
            .series("full", (0..50).map(|t| (t as f64, 1.0 - 0.9 * (-0.1 * t as f64).exp())).collect())
            .series("partial", vec![(0.0, 0.05), (49.0, 0.9)])
            .reference("bound", 0.5)
            .render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;test&gt;"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("href"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn ticks() {
        assert_eq!(linear_ticks(0.0, 1000.0), vec![0.0, 200.0, 400.0, 600.0, 800.0, 1000.0]);
        let lt = log_ticks(0.05f64.log10(), 0.0);
        assert_eq!(lt, vec![0.05, 0.1, 0.2, 0.5, 1.0]);
    }

    #[test]
    fn degenerate_ranges_do_not_panic() {
        let svg = LinePlot::new("flat", "x", "y").series("c", vec![(1.0, 2.0)]).render();
        assert!(svg.contains("<polyline"));
        let svg = LinePlot::new("empty", "x", "y").log_y().render();
        assert!(svg.contains("</svg>"));
    }
}
