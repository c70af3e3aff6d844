//! Static SVG bar charts of cluster distributions.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const COLORS: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

pub struct Series<'a> {
    pub name: &'a str,
    pub probs: &'a [f64],
}

/// Grouped bars, one group per cluster, with a dashed line at `1/k`.
pub fn distribution_chart(title: &str, series: &[Series<'_>]) -> String {
    let k = series.iter().map(|s| s.probs.len()).max().unwrap_or(0);
    let top = series
        .iter()
        .flat_map(|s| s.probs.iter().copied())
        .fold(if k > 0 { 1.0 / k as f64 } else { 0.0 }, f64::max);
    let y_max = nice_ceiling(top);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let y = |v: f64| MARGIN_TOP + plot_h * (1.0 - v / y_max);
    let group_w = plot_w / k.max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e0e0e0"/>"##,
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            MARGIN_LEFT - 6.0,
            yy + 4.0
        );
    }

    for (si, s) in series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        for (j, &p) in s.probs.iter().enumerate() {
            let x = MARGIN_LEFT + group_w * j as f64 + group_w * 0.1 + bar_w * si as f64;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{:.2}" fill="{color}"><title>{} cluster {j}: {p:.4}</title></rect>"#,
                y(p),
                plot_h * p / y_max,
                escape(s.name)
            );
        }
    }

    let label_every = (k / 20).max(1);
    for j in (0..k).step_by(label_every) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{j}</text>"#,
            MARGIN_LEFT + group_w * (j as f64 + 0.5),
            HEIGHT - MARGIN_BOTTOM + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">cluster</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    if k > 0 {
        let yu = y(1.0 / k as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{yu:.2}" x2="{:.2}" y2="{yu:.2}" stroke="#333" stroke-dasharray="6 4"><title>uniform 1/k</title></line>"##,
            WIDTH - MARGIN_RIGHT
        );
    }
    let base = y(0.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{MARGIN_LEFT:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#333"/>"##,
        WIDTH - MARGIN_RIGHT
    );

    for (si, s) in series.iter().enumerate() {
        let lx = WIDTH - MARGIN_RIGHT - 150.0;
        let ly = MARGIN_TOP + 4.0 + 16.0 * si as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{ly:.2}" width="10" height="10" fill="{}"/>"#,
            COLORS[si % COLORS.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 14.0,
            ly + 9.0,
            escape(s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let step = 10f64.powf(v.log10().floor() - 1.0);
    ((v / step).ceil() * step).min(1.0).max(v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
