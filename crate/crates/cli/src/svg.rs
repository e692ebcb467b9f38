//! Static SVG plots with axes and labels, no external assets.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, r#"<line x1="{px:.1}" y1="{y1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, y1 + 5.0);
            let _ = writeln!(out, r#"<text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#, y1 + 18.0, tick(xv));
            let _ = writeln!(out, r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv));
        }
        let _ = writeln!(out, r#"<text x="{}" y="18" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 10.0, escape(xlabel));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn open() -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n")
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, x: &[f64], series: &[&[f64]]) -> String {
    let frame = Frame { x: range(x.iter().copied()), y: range(series.iter().flat_map(|s| s.iter().copied())) };
    let mut out = open();
    frame.axes(&mut out, title, xlabel, ylabel);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, ys) in series.iter().enumerate() {
        let points: Vec<String> = x
            .iter()
            .zip(ys.iter())
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", frame.px(a), frame.py(b)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            colors[k % colors.len()],
            points.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// `z[i][j]` is drawn at `(x[j], y[i])` on a white-to-blue scale.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64], z: &[Vec<f64>]) -> String {
    let frame = Frame { x: range(x.iter().copied()), y: range(y.iter().copied()) };
    let (lo, hi) = range(z.iter().flat_map(|r| r.iter().copied()));
    let mut out = open();
    let cw = (W - LEFT - RIGHT) / x.len().max(1) as f64;
    let ch = (H - TOP - BOTTOM) / y.len().max(1) as f64;
    for (i, row) in z.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            let shade = (255.0 * (1.0 - f)).round() as u8;
            let px = LEFT + j as f64 * cw;
            let py = H - BOTTOM - (i + 1) as f64 * ch;
            let _ = writeln!(
                out,
                r#"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},255)"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    frame.axes(&mut out, title, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_plot("t <1>", "x", "y", &[0.0, 1.0, 2.0], &[&[1.0, 3.0, 2.0]]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("t &lt;1&gt;"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn flat_data_does_not_divide_by_zero() {
        let s = line_plot("", "", "", &[1.0, 1.0], &[&[0.0, 0.0]]);
        assert!(!s.contains("NaN") && !s.contains("inf"));
        let h = heatmap("", "", "", &[0.0, 1.0], &[0.0], &[vec![2.0, 2.0]]);
        assert!(!h.contains("NaN"));
        assert_eq!(h.matches("fill=\"rgb").count(), 2);
    }
}
