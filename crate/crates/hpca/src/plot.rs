//! Static SVG plot of mean sinΘ(Û, U) ± sd against the swept parameter.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Method;
use crate::error::{Error, Result};
use crate::runner::AggregateRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn colour(m: Method) -> &'static str {
    match m {
        Method::HeteroPca => "#1f77b4",
        Method::Svd => "#d62728",
        Method::Dd => "#2ca02c",
    }
}

/// Tick label with at most four significant digits and no trailing zeros.
fn label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(aggregates: &[AggregateRecord]) -> Result<String> {
    let finite: Vec<&AggregateRecord> = aggregates.iter().filter(|a| a.sin_theta_u.mean.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let xs = finite.iter().map(|a| a.sweep_value);
    let (x_min, x_max) = xs.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (x_lo, x_hi) = if x_min == x_max { (x_min - 1.0, x_max + 1.0) } else { (x_min, x_max) };
    let y_top = finite
        .iter()
        .map(|a| a.sin_theta_u.mean + a.sin_theta_u.sd)
        .fold(0.0, f64::max);
    let y_hi = if y_top > 0.0 { 1.05 * y_top } else { 1.0 };

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + ph - y / y_hi * ph;

    let first = finite[0];
    let mut svg = String::new();
    let w = &mut svg;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(first.experiment.name())
    );
    let _ = writeln!(
        w,
        r#"<path d="M{LEFT:.1},{TOP:.1}V{:.1}H{:.1}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for k in 0..=TICKS {
        let t = k as f64 / TICKS as f64;
        let (xv, yv) = (x_lo + t * (x_hi - x_lo), t * y_hi);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            w,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            label(xv)
        );
        let _ = writeln!(
            w,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            label(yv)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&first.sweep_param)
    );
    let _ = writeln!(
        w,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">mean sinΘ(Û, U) ± sd</text>"#,
        TOP + ph / 2.0
    );

    let mut methods: Vec<Method> = finite.iter().map(|a| a.method).collect();
    methods.sort();
    methods.dedup();
    for (i, &m) in methods.iter().enumerate() {
        let c = colour(m);
        let mut pts: Vec<&&AggregateRecord> = finite.iter().filter(|a| a.method == m).collect();
        pts.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value));
        let _ = writeln!(w, r#"<g class="series" data-method="{}" stroke="{c}" fill="{c}">"#, m.name());
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|a| format!("{:.1},{:.1}", sx(a.sweep_value), sy(a.sin_theta_u.mean)))
                .collect();
            let _ = writeln!(w, r#"<polyline points="{}" fill="none"/>"#, path.join(" "));
        }
        for a in &pts {
            let (px, s) = (sx(a.sweep_value), a.sin_theta_u);
            let _ = writeln!(
                w,
                r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}"/><circle cx="{px:.1}" cy="{:.1}" r="3.5"/>"#,
                sy((s.mean - s.sd).max(0.0)),
                sy(s.mean + s.sd),
                sy(s.mean)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}"/><text x="{:.1}" y="{:.1}" stroke="none" fill="black">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            m.name()
        );
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_plot(aggregates: &[AggregateRecord], path: &Path) -> Result<()> {
    let svg = render_svg(aggregates)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
