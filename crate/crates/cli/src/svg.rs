//! Minimal SVG line/point plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub struct Plot {
    title: String,
    x: (f64, f64),
    y: (f64, f64),
    xlabel: String,
    ylabel: String,
    body: String,
}

/// Bounding box of `pts` padded by 5% (and never degenerate).
pub fn bounds(pts: impl IntoIterator<Item = (f64, f64)>) -> ((f64, f64), (f64, f64)) {
    let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
    for (px, py) in pts {
        if px.is_finite() && py.is_finite() {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
    }
    let pad = |(lo, hi): (f64, f64)| {
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        let d = ((hi - lo) * 0.05).max(1e-9 * (1.0 + lo.abs().max(hi.abs())));
        (lo - d, hi + d)
    };
    (pad(x), pad(y))
}

impl Plot {
    pub fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        Plot { title: title.into(), x, y, xlabel: String::new(), ylabel: String::new(), body: String::new() }
    }

    /// Widens the shorter range so one unit is the same length on both axes.
    pub fn equal_aspect(mut self) -> Self {
        let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let (sx, sy) = ((self.x.1 - self.x.0) / w, (self.y.1 - self.y.0) / h);
        let s = sx.max(sy);
        let grow = |(lo, hi): (f64, f64), len: f64| {
            let mid = 0.5 * (lo + hi);
            (mid - 0.5 * s * len, mid + 0.5 * s * len)
        };
        self.x = grow(self.x, w);
        self.y = grow(self.y, h);
        self
    }

    pub fn labels(mut self, x: &str, y: &str) -> Self {
        self.xlabel = x.into();
        self.ylabel = y.into();
        self
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let u = MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN);
        let v = HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN);
        (u, v)
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let mut d = String::new();
        for &(x, y) in pts.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let (u, v) = self.map(x, y);
            let _ = write!(d, "{u:.2},{v:.2} ");
        }
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(self.body, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, d.trim_end());
    }

    /// Circle in data coordinates (assumes an equal-aspect plot).
    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, color: &str) {
        let (u, v) = self.map(cx, cy);
        let ru = r / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN);
        let _ = writeln!(self.body, r#"<circle cx="{u:.2}" cy="{v:.2}" r="{ru:.2}" fill="none" stroke="{color}" stroke-width="0.5"/>"#);
    }

    pub fn dot(&mut self, x: f64, y: f64, color: &str, size: f64) {
        if !(x.is_finite() && y.is_finite()) {
            return;
        }
        let (u, v) = self.map(x, y);
        let _ = writeln!(self.body, r#"<circle cx="{u:.2}" cy="{v:.2}" r="{size}" fill="{color}"/>"#);
    }

    pub fn marker(&mut self, x: f64, y: f64, color: &str, text: &str) {
        let (u, v) = self.map(x, y);
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            u - 3.5,
            v - 3.5,
            u + 6.0,
            v - 6.0,
            escape(text)
        );
    }

    /// Horizontal reference line at `y`.
    pub fn hline(&mut self, y: f64, color: &str) {
        self.polyline(&[(self.x.0, y), (self.x.1, y)], color, true);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
        let (x1, y1) = (WIDTH - MARGIN, MARGIN);
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for (i, frac) in [0.0, 0.5, 1.0].iter().enumerate() {
            let xv = self.x.0 + frac * (self.x.1 - self.x.0);
            let yv = self.y.0 + frac * (self.y.1 - self.y.0);
            let anchor = ["start", "middle", "end"][i];
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="{anchor}">{}</text>"#,
                x0 + frac * (x1 - x0),
                y0 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                y0 - frac * (y0 - y1) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(&self.xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.ylabel)
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
