//! Static SVG of the aggregate gap curves on log-log axes.

use std::fmt::Write as _;
use std::path::Path;

use crate::experiment::AggregateCurve;

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 55.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn decade_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (lo.floor() as i32..=hi.ceil() as i32).map(f64::from).filter(|e| *e >= lo - 1e-9 && *e <= hi + 1e-9).collect()
}

/// Renders mean (solid) and median (dashed) gap against oracle calls.
pub fn render_svg(curves: &[AggregateCurve]) -> String {
    let pts = |c: &AggregateCurve, ys: &[f64]| -> Vec<(f64, f64)> {
        c.checkpoints
            .iter()
            .zip(ys)
            .filter(|(x, y)| **x > 0 && y.is_finite() && **y > 0.0)
            .map(|(x, y)| ((*x as f64).log10(), y.log10()))
            .collect()
    };
    let all: Vec<(f64, f64)> = curves.iter().flat_map(|c| [pts(c, &c.mean), pts(c, &c.median)]).flatten().collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), (x, y)| (a.min(*x), b.max(*x), c.min(*y), d.max(*y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (l, r, t, b) = MARGIN;
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (W - l - r);
    let sy = |y: f64| t + (y1 - y) / (y1 - y0) * (H - t - b);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - l - r, H - t - b);
    for e in decade_ticks(x0, x1) {
        let x = sx(e);
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{t}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##, H - b);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"#, H - b + 16.0);
    }
    for e in decade_ticks(y0, y1) {
        let y = sy(e);
        let _ = writeln!(s, r##"<line x1="{l}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, W - r);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"#, l - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">oracle calls</text>"#, (l + W - r) / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">f(x) - f*</text>"#, (t + H - b) / 2.0, (t + H - b) / 2.0);

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for (ys, dash) in [(&c.mean, ""), (&c.median, r#" stroke-dasharray="5,4""#)] {
            let p = pts(c, ys);
            if p.is_empty() {
                continue;
            }
            let path: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{}"/>"#, path.join(" "));
        }
        let ly = t + 16.0 + 18.0 * i as f64;
        let lx = W - r - 210.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 24.0);
        let label = if c.diverged > 0 { format!("{} ({}/{} diverged)", c.method, c.diverged, c.runs) } else { c.method.clone() };
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(curves: &[AggregateCurve], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_svg(curves))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let c = AggregateCurve {
            method: "a<b".into(),
            runs: 2,
            diverged: 1,
            checkpoints: vec![10, 100, 1000],
            mean: vec![1.0, 0.1, 0.01],
            median: vec![1.0, 0.2, f64::NAN],
            q10: vec![0.0; 3],
            q90: vec![0.0; 3],
        };
        let svg = render_svg(&[c]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b (1/2 diverged)"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_input_still_renders() {
        let svg = render_svg(&[]);
        assert!(svg.contains("</svg>"));
    }
}
