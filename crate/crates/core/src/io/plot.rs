//! Standalone SVG plot of capital against step.

use std::fmt::Write;

use crate::regime::detect_gaps;
use crate::trajectory::Trajectory;

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 44.0;
const TICKS: f64 = 5.0;

/// Step between ticks: 1, 2, 2.5 or 5 times a power of ten.
fn nice_step(span: f64) -> f64 {
    let raw = span / TICKS;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 2.5 {
        2.5
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(value: f64, step: f64) -> String {
    // fewest decimals that represent the tick step exactly
    let decimals = (0..12)
        .find(|&d| {
            let scaled = step * 10f64.powi(d);
            (scaled - scaled.round()).abs() < 1e-6 * scaled.max(1.0)
        })
        .unwrap_or(12) as usize;
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

struct Range {
    lo: f64,
    hi: f64,
    step: f64,
}

fn axis_range(lo: f64, hi: f64) -> Range {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let step = nice_step(hi - lo);
    Range {
        lo: (lo / step).floor() * step,
        hi: (hi / step).ceil() * step,
        step,
    }
}

/// Renders the capital series with labelled axes and dashed markers at gap
/// steps (per the scenario's gap threshold).
pub fn render_capital_svg(traj: &Trajectory, width: u32, height: u32) -> String {
    let capital = traj.capital();
    let (w, h) = (f64::from(width), f64::from(height));
    let plot_w = (w - MARGIN_LEFT - MARGIN_RIGHT).max(1.0);
    let plot_h = (h - MARGIN_TOP - MARGIN_BOTTOM).max(1.0);

    let max_c = capital.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_c = capital.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let y = axis_range(min_c, max_c);
    let x = axis_range(0.0, (capital.len() - 1).max(1) as f64);

    let px = |step: f64| MARGIN_LEFT + (step - x.lo) / (x.hi - x.lo) * plot_w;
    let py = |c: f64| MARGIN_TOP + (y.hi - c) / (y.hi - y.lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="16" text-anchor="middle" font-size="13">Capital (millions) by step, {}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        traj.termination
    );

    // y ticks and grid
    let n_y = ((y.hi - y.lo) / y.step).round() as i64;
    for k in 0..=n_y {
        let v = y.lo + k as f64 * y.step;
        let yy = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            yy + 4.0,
            tick_label(v, y.step)
        );
    }
    // x ticks
    let n_x = ((x.hi - x.lo) / x.step).round() as i64;
    for k in 0..=n_x {
        let v = x.lo + k as f64 * x.step;
        let xx = px(v);
        let base = MARGIN_TOP + plot_h;
        let _ = writeln!(
            svg,
            r#"<line x1="{xx:.2}" y1="{base:.2}" x2="{xx:.2}" y2="{:.2}" stroke="black"/>"#,
            base + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 18.0,
            tick_label(v, x.step)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 6.0
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<polyline points="{l:.2},{t:.2} {l:.2},{b:.2} {r:.2},{b:.2}" fill="none" stroke="black"/>"#,
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
        r = MARGIN_LEFT + plot_w
    );

    for gap in detect_gaps(traj, traj.scenario.guards.gap_threshold) {
        let xx = px(gap.step as f64);
        let _ = writeln!(
            svg,
            r##"<line class="gap" data-step="{}" x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="#cc3333" stroke-dasharray="4 3"/>"##,
            gap.step,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
    }

    let points: Vec<String> = capital
        .iter()
        .enumerate()
        .map(|(i, &c)| format!("{:.2},{:.2}", px(i as f64), py(c)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline class="capital" points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##,
        points.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}
