//! Deterministic SVG figures of a solved body.

use std::fmt::Write as _;

use super::ResultDocument;
use crate::error::{Error, Result};
use crate::sphere::Resolution;
use crate::verifier::dual_density;

const SIZE: f64 = 480.0;

pub fn render(doc: &ResultDocument) -> Result<String> {
    if !doc.status.converged {
        return Err(Error::InvalidParameter("result did not converge; nothing to plot".into()));
    }
    match doc.solution.resolution {
        Resolution::Circle { .. } => boundary_curve(doc),
        Resolution::Sphere { n_lat, n_lon } => heat_maps(doc, n_lat, n_lon),
    }
}

fn boundary_curve(doc: &ResultDocument) -> Result<String> {
    let h = doc.support()?;
    let geom = h.geometry();
    let extent = geom
        .boundary
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(1.0, f64::max);
    let scale = 0.45 * SIZE / extent;
    let c = SIZE / 2.0;
    let mut path = String::new();
    for (i, p) in geom.boundary.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.3},{:.3} ", c + scale * p[0], c - scale * p[1]);
    }
    path.push('Z');
    let mut s = header(SIZE, SIZE);
    let _ = writeln!(
        s,
        r##"<circle id="unit-circle" cx="{c:.3}" cy="{c:.3}" r="{scale:.3}" fill="none" stroke="#999999" stroke-dasharray="4 3"/>"##
    );
    let _ = writeln!(
        s,
        r##"<path id="boundary" d="{path}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="8" y="18" font-family="sans-serif" font-size="13">q = {} f = {}</text>"#,
        doc.config.q,
        escape(&doc.config.f.to_string())
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn heat_maps(doc: &ResultDocument, n_lat: usize, n_lon: usize) -> Result<String> {
    let h = doc.support()?;
    let g = dual_density(&h.geometry(), doc.config.q)?.g;
    let ratio: Vec<f64> = g.iter().zip(&doc.rhs).map(|(a, b)| a / b - 1.0).collect();
    let cell = (SIZE / n_lon as f64).max(1.0);
    let panel_w = cell * n_lon as f64;
    let panel_h = cell * n_lat as f64;
    let top = 28.0;
    let mut s = header(panel_w + 20.0, 2.0 * (panel_h + top) + 10.0);
    for (k, (id, title, values)) in [
        ("panel-h", "h", h.values()),
        ("panel-density", "g/f - 1", ratio.as_slice()),
    ]
    .into_iter()
    .enumerate()
    {
        let y0 = k as f64 * (panel_h + top) + top;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, r#"<g id="{id}">"#);
        let _ = writeln!(
            s,
            r#"<text x="10" y="{:.1}" font-family="sans-serif" font-size="13">{} in [{:.6e}, {:.6e}]</text>"#,
            y0 - 8.0,
            escape(title),
            lo,
            hi
        );
        for j in 0..n_lat {
            for kk in 0..n_lon {
                let v = values[j * n_lon + kk];
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"/>"#,
                    10.0 + kk as f64 * cell,
                    y0 + j as f64 * cell,
                    color(t)
                );
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.3} {h:.3}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Blue-white-red ramp on `[0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (40.0 + 215.0 * u, 80.0 + 175.0 * u, 200.0 + 55.0 * u)
    } else {
        let u = (t - 0.5) / 0.5;
        (255.0 - 35.0 * u, 255.0 - 195.0 * u, 255.0 - 205.0 * u)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_config, RunConfig};

    fn path_points(svg: &str) -> Vec<(f64, f64)> {
        let start = svg.find(" d=\"").unwrap() + 4;
        let end = start + svg[start..].find('Z').unwrap();
        svg[start..end]
            .split_whitespace()
            .map(|t| {
                let (x, y) = t[1..].split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn ball_is_the_reference_circle() {
        let doc = run_config(&RunConfig::new(Resolution::Circle { n: 64 }, 1.0, "1".parse().unwrap())).unwrap();
        let svg = render(&doc).unwrap();
        assert!(svg.contains("id=\"unit-circle\""));
        let c = SIZE / 2.0;
        let r = 0.45 * SIZE;
        for (x, y) in path_points(&svg) {
            assert!((((x - c).powi(2) + (y - c).powi(2)).sqrt() - r).abs() < 2e-3);
        }
        assert_eq!(render(&doc).unwrap(), svg);
    }

    #[test]
    fn ellipse_axes_visible() {
        let doc = run_config(&RunConfig::new(
            Resolution::Circle { n: 128 },
            1.0,
            "manufacture:ellipse(1.2,1.0)".parse().unwrap(),
        ))
        .unwrap();
        let pts = path_points(&render(&doc).unwrap());
        let c = SIZE / 2.0;
        let scale = 0.45 * SIZE / 1.2;
        let xmax = pts.iter().map(|p| (p.0 - c).abs()).fold(0.0, f64::max) / scale;
        let ymax = pts.iter().map(|p| (p.1 - c).abs()).fold(0.0, f64::max) / scale;
        assert!((xmax - 1.2).abs() < 1e-3 && (ymax - 1.0).abs() < 1e-3, "{xmax} {ymax}");
    }

    #[test]
    fn sphere_has_two_panels() {
        let doc = run_config(&RunConfig::new(
            Resolution::Sphere { n_lat: 8, n_lon: 16 },
            2.0,
            "1 + 0.05*Y(2,0)".parse().unwrap(),
        ))
        .unwrap();
        let svg = render(&doc).unwrap();
        assert!(svg.contains("id=\"panel-h\"") && svg.contains("id=\"panel-density\""));
        assert_eq!(svg.matches("<rect x=").count(), 2 * 128);
    }

    #[test]
    fn unconverged_refused() {
        let mut doc = run_config(&RunConfig::new(Resolution::Circle { n: 32 }, 1.0, "1".parse().unwrap())).unwrap();
        doc.status.converged = false;
        assert!(render(&doc).is_err());
    }
}
