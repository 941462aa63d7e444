//! Minimal static SVG line plots: median curves with percentile bands.

pub struct Curve {
    pub label: String,
    /// (x, median, band_lo, band_hi)
    pub points: Vec<(f64, f64, f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN: f64 = 60.0;

fn path(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| format!("{}{x:.2},{y:.2}", if i == 0 { "M" } else { "L" }))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for &(x, m, lo, hi) in &c.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(lo.min(m));
            y_max = y_max.max(hi.max(m));
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y_min) / (y_max - y_min) * (H - 2.0 * MARGIN);

    let mut body = String::new();
    body.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    ));
    body.push_str(&format!(
        r#"<rect width="{W}" height="{H}" fill="white"/><text x="{:.1}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif">{title}</text>"#,
        W / 2.0
    ));
    // axes
    body.push_str(&format!(
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    ));
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        body.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">{:.3}</text>"#,
            sx(fx),
            H - MARGIN + 18.0,
            fx
        ));
        body.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" font-family="sans-serif">{:.3}</text>"#,
            MARGIN - 6.0,
            sy(fy) + 4.0,
            fy
        ));
    }
    body.push_str(&format!(
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{x_label}</text>"#,
        W / 2.0,
        H - 14.0
    ));
    body.push_str(&format!(
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    ));

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut band: Vec<(f64, f64)> =
            curve.points.iter().map(|&(x, _, lo, _)| (sx(x), sy(lo))).collect();
        band.extend(curve.points.iter().rev().map(|&(x, _, _, hi)| (sx(x), sy(hi))));
        body.push_str(&format!(
            r#"<path d="{} Z" fill="{color}" opacity="0.15" stroke="none"/>"#,
            path(&band)
        ));
        let median: Vec<(f64, f64)> =
            curve.points.iter().map(|&(x, m, _, _)| (sx(x), sy(m))).collect();
        body.push_str(&format!(
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            path(&median)
        ));
        let ly = MARGIN + 16.0 * i as f64 + 6.0;
        body.push_str(&format!(
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif">{}</text>"#,
            W - MARGIN - 150.0,
            W - MARGIN - 130.0,
            W - MARGIN - 124.0,
            ly + 4.0,
            curve.label
        ));
    }
    body.push_str("</svg>\n");
    body
}
