//! Minimal SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: [f64; 4] = [60.0, 20.0, 40.0, 50.0]; // left, right, top, bottom
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Half-width of a shaded band around each point.
    pub band: Option<Vec<f64>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, band: None }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Keep x and y scales equal.
    pub equal_axes: bool,
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

fn bounds(plot: &LinePlot) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in &plot.series {
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let b = s.band.as_ref().map_or(0.0, |b| b[i]);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y - b);
            y1 = y1.max(y + b);
        }
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    if plot.equal_axes {
        let w = WIDTH - MARGIN[0] - MARGIN[1];
        let h = HEIGHT - MARGIN[2] - MARGIN[3];
        let scale = ((x1 - x0) / w).max((y1 - y0) / h);
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        return (cx - scale * w / 2.0, cx + scale * w / 2.0, cy - scale * h / 2.0, cy + scale * h / 2.0);
    }
    (x0, x1, y0, y1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = bounds(self);
        let w = WIDTH - MARGIN[0] - MARGIN[1];
        let h = HEIGHT - MARGIN[2] - MARGIN[3];
        let px = |x: f64| MARGIN[0] + (x - x0) / (x1 - x0) * w;
        let py = |y: f64| MARGIN[2] + h - (y - y0) / (y1 - y0) * h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
            MARGIN[0], MARGIN[2]
        );
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN[0] + w / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{0}" text-anchor="middle" transform="rotate(-90 15 {0})">{1}</text>"#,
            MARGIN[2] + h / 2.0,
            escape(&self.y_label)
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3e}</text>"#,
                px(fx),
                MARGIN[2] + h + 15.0,
                fx
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3e}</text>"#,
                MARGIN[0] - 4.0,
                py(fy) + 4.0,
                fy
            );
        }
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let step = stride(series.points.len());
            let idx: Vec<usize> = (0..series.points.len()).step_by(step).collect();
            if let Some(band) = &series.band {
                let mut d = String::new();
                for &i in &idx {
                    let (x, y) = series.points[i];
                    let _ = write!(d, "{:.2},{:.2} ", px(x), py(y + band[i]));
                }
                for &i in idx.iter().rev() {
                    let (x, y) = series.points[i];
                    let _ = write!(d, "{:.2},{:.2} ", px(x), py(y - band[i]));
                }
                let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, d.trim_end());
            }
            let mut d = String::new();
            for &i in &idx {
                let (x, y) = series.points[i];
                let _ = write!(d, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#,
                d.trim_end()
            );
        }
        let labelled: Vec<&Series> = self.series.iter().filter(|s| !s.label.is_empty()).collect();
        if labelled.len() <= 12 {
            for (k, series) in labelled.iter().enumerate() {
                let color = PALETTE[self.series.iter().position(|s| std::ptr::eq(s, *series)).unwrap_or(k) % PALETTE.len()];
                let y = MARGIN[2] + 14.0 + 13.0 * k as f64;
                let x = MARGIN[0] + w - 110.0;
                let _ = writeln!(s, r#"<line x1="{x}" y1="{0}" x2="{1}" y2="{0}" stroke="{color}"/>"#, y - 4.0, x + 15.0);
                let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 20.0, escape(&series.label));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
