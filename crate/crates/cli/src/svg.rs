//! Single-file SVG line chart of empirical rates against n.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

/// `points` are `(n, rate)`; non-finite rates are skipped. The x axis is
/// logarithmic and a dashed line marks `reference`.
pub fn rate_chart(title: &str, points: &[(f64, f64)], reference: f64) -> String {
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(n, r)| *n > 0.0 && r.is_finite()).collect();
    let (mut x_lo, mut x_hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (n, _)| (lo.min(n.log10()), hi.max(n.log10())));
    if !(x_hi > x_lo) {
        (x_lo, x_hi) = if x_lo.is_finite() { (x_lo - 0.5, x_lo + 0.5) } else { (0.0, 1.0) };
    }
    let y_hi = finite.iter().map(|p| p.1).fold(reference, f64::max) * 1.1;
    let y_lo = finite.iter().map(|p| p.1).fold(reference, f64::min).min(0.0);
    let y_hi = if y_hi > y_lo { y_hi } else { y_lo + 1.0 };
    let sx = |n: f64| MARGIN + (n.log10() - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |r: f64| HEIGHT - MARGIN - (r - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#
    );
    for k in (x_lo.ceil() as i32)..=(x_hi.floor() as i32) {
        let x = sx(10f64.powi(k));
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">1e{k}</text>"#,
            bottom + 16.0
        );
    }
    for i in 0..=4 {
        let r = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{r:.3}</text>"#,
            left - 6.0,
            sy(r) + 4.0
        );
    }
    let yr = sy(reference);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{yr:.1}" x2="{right}" y2="{yr:.1}" stroke="gray" stroke-dasharray="6,4"/>"#
    );
    let path: Vec<String> = finite.iter().map(|(n, r)| format!("{:.1},{:.1}", sx(*n), sy(*r))).collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
        path.join(" ")
    );
    for (n, r) in &finite {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, sx(*n), sy(*r));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="gray">reference {reference:.4}</text>"#,
        right - 110.0,
        yr - 6.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
