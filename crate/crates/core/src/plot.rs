//! Static SVG charts for metric tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Five-number summary used for box plots; quartiles by linear interpolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("box plot group is empty or non-finite".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(BoxStats {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !(hi > lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Self { lo: lo - pad, hi: hi + pad }
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.lo) / (self.hi - self.lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(svg: &mut String, title: &str, frame: &Frame) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, y0, y1) = (MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, WIDTH - MARGIN);
    for k in 0..=4 {
        let v = frame.lo + (frame.hi - frame.lo) * k as f64 / 4.0;
        let y = frame.y(v);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, y + 4.0);
    }
}

/// One box per named group, whiskers at min and max.
pub fn box_plot_svg(title: &str, groups: &[(String, Vec<f64>)]) -> Result<String> {
    if groups.is_empty() {
        return Err(Error::Input("nothing to plot".into()));
    }
    let stats = groups.iter().map(|(_, v)| box_stats(v)).collect::<Result<Vec<_>>>()?;
    let frame = Frame::new(stats.iter().flat_map(|s| [s.min, s.max]));
    let mut svg = String::new();
    header(&mut svg, title, &frame);
    let slot = (WIDTH - 2.0 * MARGIN) / groups.len() as f64;
    for (i, ((name, _), s)) in groups.iter().zip(&stats).enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let half = (slot * 0.3).min(40.0);
        let color = PALETTE[i % PALETTE.len()];
        let (ymin, yq1, ymed, yq3, ymax) = (frame.y(s.min), frame.y(s.q1), frame.y(s.median), frame.y(s.q3), frame.y(s.max));
        let _ = writeln!(svg, r#"<line x1="{cx:.2}" y1="{ymax:.2}" x2="{cx:.2}" y2="{yq3:.2}" stroke="{color}"/>"#);
        let _ = writeln!(svg, r#"<line x1="{cx:.2}" y1="{yq1:.2}" x2="{cx:.2}" y2="{ymin:.2}" stroke="{color}"/>"#);
        for y in [ymin, ymax] {
            let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}"/>"#, cx - half / 2.0, cx + half / 2.0);
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.3" stroke="{color}"/>"#,
            cx - half,
            2.0 * half,
            (yq1 - yq3).max(0.5)
        );
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="black" stroke-width="2"/>"#, cx - half, cx + half);
        let _ = writeln!(svg, r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#, HEIGHT - MARGIN + 16.0, escape(name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// One polyline per named series over a shared x axis.
pub fn line_plot_svg(title: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> Result<String> {
    if x.len() < 2 || series.is_empty() || series.iter().any(|(_, s)| s.len() != x.len()) {
        return Err(Error::Input("line plot needs >= 2 x values and equally long series".into()));
    }
    if x.iter().chain(series.iter().flat_map(|(_, s)| s)).any(|v| !v.is_finite()) {
        return Err(Error::Input("line plot values must be finite".into()));
    }
    let frame = Frame::new(series.iter().flat_map(|(_, s)| s.iter().copied()));
    let (xlo, xhi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if xhi > xlo { xhi - xlo } else { 1.0 };
    let px = |v: f64| MARGIN + (v - xlo) / span * (WIDTH - 2.0 * MARGIN);
    let mut svg = String::new();
    header(&mut svg, title, &frame);
    for (i, (name, s)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = x.iter().zip(s).map(|(&a, &b)| format!("{:.2},{:.2}", px(a), frame.y(b))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, points.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 100.0,
            MARGIN + 14.0 * i as f64,
            escape(name)
        );
    }
    for k in 0..=4 {
        let v = xlo + span * k as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{}" text-anchor="middle">{v:.3}</text>"#, px(v), HEIGHT - MARGIN + 16.0);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let s = box_stats(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!(box_stats(&[1.0, 2.0]).unwrap().median, 1.5);
        assert!(box_stats(&[]).is_err());
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = box_plot_svg("dice <ct>", &[("a".into(), vec![0.8, 0.9]), ("b".into(), vec![0.7])]).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("&lt;ct&gt;"));
        assert_eq!(svg.matches("<rect").count(), 3);
        let line = line_plot_svg("r", &[0.0, 1.0, 2.0], &[("res".into(), vec![1.0, 0.5, 0.25])]).unwrap();
        assert!(line.contains("<polyline"));
        assert!(line_plot_svg("r", &[0.0], &[]).is_err());
    }
}
