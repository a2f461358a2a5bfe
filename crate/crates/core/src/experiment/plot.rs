//! Minimal SVG line plot of a sweep: mean with a ±stddev error bar per value.

use std::fmt::Write;

use crate::experiment::sweep::SweepResult;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// SVG document plotting `metric` against the sweep axis. Unknown metrics
/// yield an empty plot frame.
pub fn render_svg(result: &SweepResult, metric: &str) -> String {
    let points: Vec<(f64, f64, f64)> = result
        .summary
        .iter()
        .filter_map(|s| Some((s.value, s.mean(metric)?, s.stddev(metric)?)))
        .collect();
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]).chain([0.0]));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        H - 15.0,
        result.axis
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {})">{metric}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, anchor, x, y) in [(x0, "middle", sx(x0), bottom + 18.0), (x1, "middle", sx(x1), bottom + 18.0)] {
        let _ = writeln!(svg, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="11">{v}</text>"#);
    }
    for v in [y0, y1] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#,
            left - 6.0,
            sy(v) + 4.0,
            (v * 1000.0).round() / 1000.0
        );
    }
    if !points.is_empty() {
        let line: Vec<String> = points.iter().map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, line.join(" "));
    }
    for &(x, m, sd) in &points {
        let (px, lo, hi) = (sx(x), sy(m - sd), sy(m + sd));
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="gray"/>"#);
        let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sy(m));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::sweep::{Axis, SweepSummary};

    #[test]
    fn plots_one_marker_per_value() {
        let summary = [1.0, 2.0, 3.0]
            .iter()
            .map(|&v| SweepSummary { value: v, runs: 2, stats: vec![("rounds", v * 2.0, 0.5)] })
            .collect();
        let res = SweepResult { axis: Axis::K, rows: Vec::new(), summary };
        let svg = render_svg(&res, "rounds");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(render_svg(&res, "nothing").matches("<circle").count(), 0);
    }
}
