//! Self-contained SVG line charts and heatmaps.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional ± band per point, drawn as error bars.
    pub errors: Option<Vec<f64>>,
    pub style: Style,
}

impl Series {
    pub fn line(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, errors: None, style: Style::Line }
    }

    pub fn markers(label: &str, points: Vec<(f64, f64)>, errors: Option<Vec<f64>>) -> Self {
        Series { label: label.into(), points, errors, style: Style::Markers }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range<I: Iterator<Item = f64>>(it: I) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in it.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| {
        let e = s.errors.clone().unwrap_or_else(|| vec![0.0; s.points.len()]);
        s.points.iter().zip(e).flat_map(|(p, e)| [p.1 - e, p.1 + e]).collect::<Vec<_>>()
    }));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#, sx(fx), TOP + ph + 16.0, fx);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, LEFT - 6.0, sy(fy) + 4.0, fy);
        let _ = writeln!(s, r##"<line x1="{0:.1}" y1="{TOP}" x2="{0:.1}" y2="{1:.1}" stroke="#ddd"/>"##, sx(fx), TOP + ph);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(ylabel)
    );
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        match ser.style {
            Style::Line => {
                let pts: Vec<String> = ser
                    .points
                    .iter()
                    .filter(|p| p.1.is_finite())
                    .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
                    .collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            }
            Style::Markers => {
                for (j, p) in ser.points.iter().enumerate() {
                    if let Some(e) = ser.errors.as_ref().map(|e| e[j]) {
                        let _ = writeln!(
                            s,
                            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{c}" stroke-opacity="0.5"/>"#,
                            sx(p.0),
                            sy(p.1 - e),
                            sy(p.1 + e)
                        );
                    }
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{c}"/>"#, sx(p.0), sy(p.1));
                }
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="14" height="4" fill="{c}"/>"#, ly - 6.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 20.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Heatmap of values[i][j] (rows drawn top to bottom); NaN cells are left blank.
pub fn heatmap(title: &str, values: &[Vec<f64>]) -> String {
    let rows = values.len().max(1);
    let cols = values.iter().map(|r| r.len()).max().unwrap_or(1).max(1);
    let (lo, hi) = range(values.iter().flatten().copied());
    let side = (H - TOP - BOTTOM).min(W - LEFT - RIGHT);
    let (cw, ch) = (side / cols as f64, side / rows as f64);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, LEFT + side / 2.0, escape(title));
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let u = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            let (r, g, b) = ((255.0 * u) as u8, (80.0 + 100.0 * (1.0 - (2.0 * u - 1.0).abs())) as u8, (255.0 * (1.0 - u)) as u8);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                LEFT + j as f64 * cw,
                TOP + i as f64 * ch,
                cw + 0.3,
                ch + 0.3
            );
        }
    }
    let lx = LEFT + side + 20.0;
    let _ = writeln!(s, r#"<text x="{lx}" y="{}">max {:.3e}</text>"#, TOP + 12.0, hi);
    let _ = writeln!(s, r#"<text x="{lx}" y="{}">min {:.3e}</text>"#, TOP + side, lo);
    s.push_str("</svg>\n");
    s
}

/// Monte Carlo markers (±stderr) over the ODE and PDE lines at snapshot `k`.
pub fn profile_overlay(point: &crate::harness::PointResult, k: usize, t: f64) -> String {
    let p = &point.params;
    let grid = crate::harness::lattice_grid(p.n);
    let est = &point.estimates[k];
    let mut series = vec![Series::markers(
        "Monte Carlo",
        grid.iter().copied().zip(est.mean.iter().copied()).collect(),
        Some(est.stderr.clone()),
    )];
    if let Some(o) = &point.ode {
        series.push(Series::line("discrete ODE", grid.iter().copied().zip(o[k].iter().copied()).collect()));
    }
    if let Some(v) = &point.pde[k] {
        series.push(Series::line("PDE", grid.iter().copied().zip(v.iter().copied()).collect()));
    }
    let title = format!("{} N={} theta={} kappa={} t={t}", p.kernel.label(), p.n, p.theta, p.kappa);
    line_chart(&title, "q", "rho", &series)
}

/// Stationary profiles: Dirichlet, Robin for each κ, Neumann.
pub fn stationary_figure(alpha: f64, beta: f64, kappas: &[f64]) -> String {
    use exh_core::stationary::{stat_sol_dir, stat_sol_rob};
    let qs: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let mut series = vec![Series::line("Dirichlet (theta<1)", qs.iter().map(|&q| (q, stat_sol_dir(q, alpha, beta))).collect())];
    for &k in kappas {
        series.push(Series::line(&format!("Robin kappa={k}"), qs.iter().map(|&q| (q, stat_sol_rob(q, k, alpha, beta))).collect()));
    }
    let mid = 0.5 * (alpha + beta);
    series.push(Series::line("Neumann (theta>1)", qs.iter().map(|&q| (q, mid)).collect()));
    line_chart(&format!("stationary profiles, alpha={alpha} beta={beta}"), "q", "rho", &series)
}
