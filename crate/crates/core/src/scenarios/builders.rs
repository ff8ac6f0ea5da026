use nalgebra::dvector;

use super::ScenarioError;
use crate::expr::parse_expr;
use crate::stl::{Predicate, PredicateTable};

fn strip(name: &str, row: [f64; 2], y: f64, r: f64) -> Predicate {
    Predicate::linear_row(name, &row, y, r).expect("constant strip parameters are valid")
}

/// Parking lot: `h1, h2` bound the lot `P`, `h3, h4` its exit (the region
/// `P ∧ O`), `h5` the street `O`. Each `hᵢ = r − |H x − y|`.
pub fn build_parking_predicates() -> PredicateTable {
    let mut t = PredicateTable::new()
        .with(strip("h1", [1.0, 0.0], 0.2805, 1.7175))
        .with(strip("h2", [0.0, 1.0], 0.839, 2.429))
        .with(strip("h3", [1.0, 0.0], -0.3225, 1.3045))
        .with(strip("h4", [0.0, 1.0], -1.137, 0.453))
        .with(strip("h5", [0.0, 1.0], -1.665, 1.0));
    t.define_atom("P", &["h1", "h2"]).expect("declared above");
    t.define_atom("O", &["h5"]).expect("declared above");
    t.define_region(&["P", "O"], &["h3", "h4"]).expect("declared above");
    t
}

/// Roundabout: before `B` (`h1`), the circle `O` (`h2`, nonlinear) and after
/// `A` (`h3`). `h2(x) = 1.429 − ‖x − (0.307, 0.044)‖`.
pub fn build_roundabout_predicates() -> PredicateTable {
    build_roundabout_with("norm(x1 - 0.307, x2 - 0.044)", 1.429)
}

/// The roundabout with `h2` written through the squared distance,
/// `1.429² − ‖x − (0.307, 0.044)‖²`. Same zero set and sign as
/// [`build_roundabout_predicates`], but smooth at the circle center, so
/// linearizing there never hits the kink of the norm.
pub fn build_roundabout_smooth_predicates() -> PredicateTable {
    build_roundabout_with("sq(x1 - 0.307, x2 - 0.044)", 1.429 * 1.429)
}

fn build_roundabout_with(circle: &str, r: f64) -> PredicateTable {
    let h2 = parse_expr(circle, 2).expect("constant expression parses");
    let mut t = PredicateTable::new()
        .with(strip("h1", [0.0, 1.0], 2.25, 1.0))
        .with(Predicate::nonlinear("h2", vec![h2], dvector![r]).expect("valid radius"))
        .with(strip("h3", [0.0, 1.0], -2.169, 1.0));
    t.define_atom("B", &["h1"]).expect("declared above");
    t.define_atom("O", &["h2"]).expect("declared above");
    t.define_atom("A", &["h3"]).expect("declared above");
    t
}

fn slope(a: [f64; 2], b: [f64; 2], edge: &'static str) -> Result<f64, ScenarioError> {
    let dx = b[0] - a[0];
    let scale = 1.0 + a[0].abs().max(b[0].abs());
    if dx.abs() <= 1e-12 * scale {
        return Err(ScenarioError::VerticalEdge { edge });
    }
    Ok((b[1] - a[1]) / dx)
}

/// Heading rectangle `T` from its corners: corner 1 shares an edge with
/// corners 2 and 3, corner 4 is opposite corner 1.
///
/// With `mᵢ` the slope from corner 1 to corner `i + 1` and `cᵢ` the
/// intercepts of the four edge lines, returns
///
/// * `h6 = ½|c2 − c3| − |−m2 x1 + x2 − ½(c2 + c3)|` (between the two edges of slope `m2`),
/// * `h7 = ½|c1 − c4| − |−m1 x1 + x2 − ½(c1 + c4)|` (between the two edges of slope `m1`).
///
/// Edges parallel to the `x2` axis make a slope undefined; rotate first.
pub fn build_heading_region(corners: [[f64; 2]; 4]) -> Result<(Predicate, Predicate), ScenarioError> {
    build_heading_region_named(corners, "h6", "h7")
}

pub fn build_heading_region_named(
    corners: [[f64; 2]; 4],
    name6: &str,
    name7: &str,
) -> Result<(Predicate, Predicate), ScenarioError> {
    let [p1, p2, p3, _] = corners;
    let m1 = slope(p1, p2, "corner 1 to corner 2")?;
    let m2 = slope(p1, p3, "corner 1 to corner 3")?;
    let c1 = -m1 * p1[0] + p1[1];
    let c2 = -m2 * p1[0] + p1[1];
    let c3 = -m2 * p2[0] + p2[1];
    let c4 = -m1 * p3[0] + p3[1];
    let h6 = Predicate::linear_row(name6, &[-m2, 1.0], 0.5 * (c2 + c3), 0.5 * (c2 - c3).abs())?;
    let h7 = Predicate::linear_row(name7, &[-m1, 1.0], 0.5 * (c1 + c4), 0.5 * (c1 - c4).abs())?;
    Ok((h6, h7))
}

/// Corners of the rectangle anchored at `anchor`, aligned with `heading`:
/// `[back, front]` along the heading and `±half_width` across it, ordered
/// for [`build_heading_region`].
pub fn heading_rectangle(anchor: [f64; 2], heading: f64, back: f64, front: f64, half_width: f64) -> [[f64; 2]; 4] {
    let e = [heading.cos(), heading.sin()];
    let n = [-e[1], e[0]];
    let at = |s: f64, l: f64| [anchor[0] + s * e[0] + l * n[0], anchor[1] + s * e[1] + l * n[1]];
    [
        at(back, -half_width),
        at(front, -half_width),
        at(back, half_width),
        at(front, half_width),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::PredicateKind;

    fn linear(p: &Predicate) -> (Vec<f64>, f64, f64) {
        match p.kind() {
            PredicateKind::Linear { h, y, r } => (h.row(0).iter().copied().collect(), y[0], r[0]),
            PredicateKind::Nonlinear { .. } => panic!("expected a linear predicate"),
        }
    }

    #[test]
    fn parking_values() {
        let t = build_parking_predicates();
        assert_eq!(linear(t.get("h1").unwrap()), (vec![1.0, 0.0], 0.2805, 1.7175));
        assert_eq!(linear(t.get("h2").unwrap()), (vec![0.0, 1.0], 0.839, 2.429));
        assert_eq!(linear(t.get("h3").unwrap()), (vec![1.0, 0.0], -0.3225, 1.3045));
        assert_eq!(linear(t.get("h4").unwrap()), (vec![0.0, 1.0], -1.137, 0.453));
        assert_eq!(linear(t.get("h5").unwrap()), (vec![0.0, 1.0], -1.665, 1.0));
    }

    #[test]
    fn margin_at_own_offset_is_the_radius() {
        let t = build_parking_predicates();
        for p in t.predicates() {
            let (h, y, r) = linear(p);
            let x = if h[0] == 1.0 { [y, 123.0] } else { [-77.0, y] };
            assert!((p.margin(&x).unwrap() - r).abs() < 1e-12, "{}", p.name());
        }
    }

    #[test]
    fn roundabout_values() {
        let t = build_roundabout_predicates();
        assert_eq!(linear(t.get("h1").unwrap()), (vec![0.0, 1.0], 2.25, 1.0));
        assert_eq!(linear(t.get("h3").unwrap()), (vec![0.0, 1.0], -2.169, 1.0));
        let h2 = t.get("h2").unwrap();
        assert!((h2.margin(&[0.307, 0.044]).unwrap() - 1.429).abs() < 1e-12);
        let (s, c) = 0.7f64.sin_cos();
        let edge = [0.307 + 1.429 * c, 0.044 + 1.429 * s];
        assert!(h2.margin(&edge).unwrap().abs() < 1e-12);
        let smooth = build_roundabout_smooth_predicates();
        for x in [[0.0, 0.0], [1.5, 0.2], edge, [2.0, -1.0]] {
            let a = h2.holds(&x).unwrap() || h2.margin(&x).unwrap().abs() < 1e-9;
            let b = smooth.get("h2").unwrap().holds(&x).unwrap()
                || smooth.get("h2").unwrap().margin(&x).unwrap().abs() < 1e-9;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn axis_aligned_square_has_vertical_edge() {
        let sq = [[1.0, 0.0], [1.0, 1.0], [0.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            build_heading_region(sq),
            Err(ScenarioError::VerticalEdge { .. })
        ));
    }

    #[test]
    fn tilted_square_vertices_on_boundaries() {
        // 45° square with unit diagonal.
        let corners = [[0.0, 0.0], [0.5, 0.5], [0.5, -0.5], [1.0, 0.0]];
        let (h6, h7) = build_heading_region(corners).unwrap();
        for c in corners {
            let m6 = h6.margin(&c).unwrap();
            let m7 = h7.margin(&c).unwrap();
            assert!(m6 > -1e-12 && m7 > -1e-12);
            assert!(m6.abs() < 1e-12 || m7.abs() < 1e-12);
        }
        assert!(h6.margin(&[0.5, 0.0]).unwrap() > 0.0);
        assert!(h7.margin(&[0.5, 0.0]).unwrap() > 0.0);
        assert!(!h6.holds(&[1.2, 0.0]).unwrap() || !h7.holds(&[1.2, 0.0]).unwrap());
    }

    #[test]
    fn rectangle_contains_forward_motion() {
        let th = 0.4;
        let corners = heading_rectangle([1.0, 2.0], th, -0.1, 0.5, 0.2);
        let (h6, h7) = build_heading_region(corners).unwrap();
        let ahead = [1.0 + 0.3 * th.cos(), 2.0 + 0.3 * th.sin()];
        assert!(h6.holds(&ahead).unwrap() && h7.holds(&ahead).unwrap());
        let behind = [1.0 - 0.3 * th.cos(), 2.0 - 0.3 * th.sin()];
        assert!(!(h6.holds(&behind).unwrap() && h7.holds(&behind).unwrap()));
    }
}
