//! Minimal deterministic SVG line plots for the experiment reports.
//!
//! Batch output only; fixed-precision coordinates keep files byte-identical
//! across runs.

use std::io;
use std::path::Path;

pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// Round a range endpoint to a tidy tick step.
fn nice_ticks(min: f64, max: f64) -> Vec<f64> {
    let span = (max - min).max(1.0e-12);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 7.0)
        .unwrap_or(10.0 * mag);
    let start = (min / step).floor() * step;
    let mut ticks = Vec::new();
    let mut v = start;
    while v <= max + 0.5 * step {
        if v >= min - 0.5 * step {
            ticks.push(v);
        }
        v += step;
    }
    ticks
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for (x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    xs.push(*x);
                    ys.push(*y);
                }
            }
        }
        let (x_min, x_max) = match (
            xs.iter().cloned().reduce(f64::min),
            xs.iter().cloned().reduce(f64::max),
        ) {
            (Some(a), Some(b)) if b > a => (a, b),
            _ => (0.0, 1.0),
        };
        let (y_min, y_max) = match (
            ys.iter().cloned().reduce(f64::min),
            ys.iter().cloned().reduce(f64::max),
        ) {
            (Some(a), Some(b)) if b > a => (a.min(0.0), b),
            _ => (0.0, 1.0),
        };
        let plot_w = W - MARGIN_L - MARGIN_R;
        let plot_h = H - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
        let sy = |y: f64| H - MARGIN_B - (y - y_min) / (y_max - y_min) * plot_h;

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            self.title
        ));

        // Axes and grid.
        for t in nice_ticks(x_min, x_max) {
            let x = sx(t);
            svg.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
                MARGIN_T,
                H - MARGIN_B
            ));
            svg.push_str(&format!(
                "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{t:.1}</text>\n",
                H - MARGIN_B + 16.0
            ));
        }
        for t in nice_ticks(y_min, y_max) {
            let y = sy(t);
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
                MARGIN_L,
                W - MARGIN_R
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{t:.3}</text>\n",
                MARGIN_L - 6.0
            ));
        }
        svg.push_str(&format!(
            "<rect x=\"{MARGIN_L:.1}\" y=\"{MARGIN_T:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"black\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_L + plot_w / 2.0,
            H - 14.0,
            self.x_label
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            self.y_label
        ));

        // Series.
        for (i, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            if pts.len() >= 2 {
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
                    s.color,
                    pts.join(" ")
                ));
            }
            let ly = MARGIN_T + 16.0 * (i as f64 + 1.0);
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                MARGIN_L + 8.0,
                MARGIN_L + 32.0,
                s.color
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                MARGIN_L + 38.0,
                ly + 4.0,
                s.label
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write_svg(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_svg())
    }
}

/// Default series palette.
pub fn palette(i: usize) -> String {
    const COLORS: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
    ];
    COLORS[i % COLORS.len()].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let plot = LinePlot {
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "a".into(),
                color: palette(0),
                points: (0..50)
                    .map(|i| (i as f64, (i as f64 * 0.3).sin()))
                    .collect(),
            }],
        };
        let s1 = plot.to_svg();
        let s2 = plot.to_svg();
        assert_eq!(s1, s2);
        assert!(s1.starts_with("<svg"));
        assert!(s1.ends_with("</svg>\n"));
        assert!(s1.contains("polyline"));
    }
}
