//! Static SVG rendering of the stability-region construction: axes, the
//! chain of effective service points, the cones fanned from each point,
//! and the filled region polygon.

use qstab::region2d::{PartitionFamily, RegionPolygon};
use std::fmt::Write;

const SIZE: f64 = 640.0;
const PAD: f64 = 56.0;

struct Frame {
    scale: f64,
}

impl Frame {
    fn new(reach: f64) -> Self {
        Self {
            scale: (SIZE - 2.0 * PAD) / reach,
        }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + v * self.scale
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - PAD - v * self.scale
    }
}

pub fn render_region(family: &PartitionFamily, polygon: &RegionPolygon) -> String {
    let psi = family.service_points();
    let rays = family.rays();
    let reach = polygon
        .vertices
        .iter()
        .chain(psi.iter())
        .flatten()
        .fold(1.0f64, |m, &c| m.max(c.abs()))
        * 1.25;
    let f = Frame::new(reach);

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Filled stability region.
    if polygon.vertices.len() >= 3 {
        let pts: Vec<String> = polygon
            .vertices
            .iter()
            .map(|v| format!("{:.2},{:.2}", f.x(v[0]), f.y(v[1])))
            .collect();
        let _ = write!(
            svg,
            r#"<polygon points="{}" fill="steelblue" fill-opacity="0.25" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }

    // Axes.
    let _ = write!(
        svg,
        r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black" stroke-width="1.5"/>"#,
        f.x(0.0) - 8.0,
        f.y(0.0),
        f.x(reach)
    );
    let _ = write!(
        svg,
        r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black" stroke-width="1.5"/>"#,
        f.x(0.0),
        f.y(0.0) + 8.0,
        f.y(reach)
    );
    let _ = write!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14">lambda1</text>"#,
        f.x(reach) - 60.0,
        f.y(0.0) + 24.0
    );
    let _ = write!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14">lambda2</text>"#,
        f.x(0.0) - 40.0,
        f.y(reach) - 8.0
    );

    // Cones fanned from each service point along its bounding rays.
    let arm = 0.3 * reach;
    for (k, p) in psi.iter().enumerate() {
        for v in [rays[k], rays[k + 1]] {
            let _ = write!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="darkgray" stroke-width="1" stroke-dasharray="4 3"/>"#,
                f.x(p[0]),
                f.y(p[1]),
                f.x(p[0] + arm * v[0]),
                f.y(p[1] + arm * v[1])
            );
        }
    }

    // Chain of service points.
    if psi.len() >= 2 {
        let pts: Vec<String> = psi
            .iter()
            .map(|p| format!("{:.2},{:.2}", f.x(p[0]), f.y(p[1])))
            .collect();
        let _ = write!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }
    for (k, p) in psi.iter().enumerate() {
        let _ = write!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="firebrick"/>"#,
            f.x(p[0]),
            f.y(p[1])
        );
        let _ = write!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="firebrick">psi{}</text>"#,
            f.x(p[0]) + 7.0,
            f.y(p[1]) - 7.0,
            k + 1
        );
    }

    svg.push_str("</svg>");
    svg
}
