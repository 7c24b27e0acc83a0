//! Static SVG line plots of time series.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// One polyline per series over shared sample times. With `log_time`,
/// samples at `t ≤ 0` are dropped and the horizontal axis is `log₁₀ t`.
pub fn timeseries(title: &str, times: &[f64], series: &[(String, Vec<f64>)], log_time: bool) -> String {
    let keep: Vec<usize> = (0..times.len()).filter(|&i| !log_time || times[i] > 0.0).collect();
    let tx = |t: f64| if log_time { t.log10() } else { t };
    let (mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &keep {
        let t = tx(times[i]);
        t0 = t0.min(t);
        t1 = t1.max(t);
        for (_, v) in series {
            if v[i].is_finite() {
                y0 = y0.min(v[i]);
                y1 = y1.max(v[i]);
            }
        }
    }
    if !(t0 < t1) {
        t1 = t0 + 1.0;
    }
    if !(y0 < y1) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |t: f64| MARGIN + (tx(t) - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let label = |v: f64| format!("{v:.4}");
    let tl = |v: f64| if log_time { format!("1e{v:.2}") } else { label(v) };
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#, HEIGHT - MARGIN + 18.0, tl(t0));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 18.0,
        tl(t1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        if log_time { "log10 t" } else { "t" }
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#, MARGIN - 6.0, HEIGHT - MARGIN, label(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#, MARGIN - 6.0, MARGIN + 10.0, label(y1));
    for (j, (name, v)) in series.iter().enumerate() {
        let mut pts = String::new();
        for &i in &keep {
            if v[i].is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(times[i]), py(v[i]));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"><title>{}</title></polyline>"#,
            COLORS[j % COLORS.len()],
            pts.trim_end(),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
