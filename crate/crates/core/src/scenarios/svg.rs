use std::fmt::Write;

use super::run::StepReport;
use super::ScenarioError;

const SIZE: f64 = 480.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];

fn path(poly: &[[f64; 2]], map: &dyn Fn([f64; 2]) -> (f64, f64)) -> String {
    let mut d = String::new();
    for (i, p) in poly.iter().enumerate() {
        let (x, y) = map(*p);
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
    }
    d.push('Z');
    d
}

/// One step as SVG: the unconstrained set in gray, every formula's
/// zonotope outlined in its own color and its constrained zonotope filled
/// in red.
pub fn render_step(step: &StepReport) -> Result<String, ScenarioError> {
    let mut layers: Vec<(String, Vec<[f64; 2]>, &str, &str)> = Vec::new();
    layers.push((
        "unconstrained".into(),
        step.unconstrained.vertices_2d()?,
        "#bbbbbb",
        "#555555",
    ));
    for (i, f) in step.formulas.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(z) = &f.zonotope {
            layers.push((format!("{} zonotope", f.name), z.vertices_2d()?, "none", color));
        }
        if let Some(c) = &f.constrained {
            layers.push((
                format!("{} constrained zonotope", f.name),
                c.polygon()?,
                "#d62728",
                "#d62728",
            ));
        }
    }
    let points = layers.iter().flat_map(|l| l.1.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.1;
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let scale = SIZE / span;
    let map = move |p: [f64; 2]| {
        (
            SIZE / 2.0 + (p[0] - mid[0]) * scale,
            SIZE / 2.0 - (p[1] - mid[1]) * scale,
        )
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, "<title>step {}</title>", step.step);
    for (name, poly, fill, stroke) in &layers {
        if poly.is_empty() {
            continue;
        }
        let opacity = if *fill == "none" { 1.0 } else { 0.35 };
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="{fill}" fill-opacity="{opacity}" stroke="{stroke}" stroke-width="1.5"><title>{name}</title></path>"#,
            path(poly, &map)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="8" y="18" font-family="sans-serif" font-size="13">step {}: x1 ∈ [{:.2}, {:.2}], x2 ∈ [{:.2}, {:.2}]</text>"#,
        step.step, lo[0], hi[0], lo[1], hi[1]
    );
    out.push_str("</svg>\n");
    Ok(out)
}
