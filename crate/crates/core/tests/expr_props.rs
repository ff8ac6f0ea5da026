mod common;

use common::{gradient_error, remainder_violation, rng, small_box, smooth_expr, uniform_in_box};
use nalgebra::DVector;
use proptest::prelude::*;
use reachstl::constrain::lagrange_remainder;
use reachstl::expr::parse_expr;
use reachstl::setalg::IntervalVector;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_extension_encloses_point_values(e in smooth_expr(3), (lo, hi) in small_box(3), seed in any::<u64>()) {
        let bx = IntervalVector::from_slices(&lo, &hi).unwrap();
        let iv = e.eval_interval(&bx).unwrap();
        let mut r = rng(seed);
        for _ in 0..50 {
            let x = uniform_in_box(&lo, &hi, &mut r);
            let v = e.eval(&x).unwrap();
            // Endpoint arithmetic is not outward-rounded; allow a few ulps.
            let slack = 1e-12 * (1.0 + v.abs());
            prop_assert!(iv.lower - slack <= v && v <= iv.upper + slack, "{e} at {x:?}: {v} not in {iv:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences(e in smooth_expr(3), x in prop::collection::vec(-1.5..1.5f64, 3)) {
        let (v, _) = e.value_and_gradient(&x).unwrap();
        prop_assert_eq!(v, e.eval(&x).unwrap());
        let err = gradient_error(&e, &x);
        prop_assert!(err <= 1e-6, "{e} at {x:?}: relative error {err}");
    }

    #[test]
    fn symbolic_partial_agrees_with_forward_mode(e in smooth_expr(2), x in prop::collection::vec(-1.5..1.5f64, 2)) {
        let g = e.gradient(&x).unwrap();
        for (j, gj) in g.iter().enumerate() {
            let p = e.partial(j).eval(&x).unwrap();
            prop_assert!((p - gj).abs() <= 1e-9 * (1.0 + gj.abs()));
        }
    }

    #[test]
    fn printed_form_parses_back(e in smooth_expr(3), x in prop::collection::vec(-1.5..1.5f64, 3)) {
        let text = e.to_string();
        let back = parse_expr(&text, 3).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        let (a, b) = (e.eval(&x).unwrap(), back.eval(&x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{text}: {a} vs {b}");
    }

    #[test]
    fn lagrange_remainder_encloses_taylor_error(e in smooth_expr(2), (lo, hi) in small_box(2), seed in any::<u64>()) {
        if let Some(msg) = remainder_violation(&e, &lo, &hi, 50, seed) {
            return Err(TestCaseError::fail(msg));
        }
    }

    #[test]
    fn f32_and_f64_evaluations_agree(e in smooth_expr(2), x in prop::collection::vec(-1.0..1.0f64, 2)) {
        let v64 = e.eval(&x).unwrap();
        let x32: Vec<f32> = x.iter().map(|v| *v as f32).collect();
        let v32 = e.eval(&x32).unwrap() as f64;
        prop_assert!((v64 - v32).abs() <= 1e-3 * (1.0 + v64.abs()), "{e}: {v64} vs {v32}");
    }
}

#[test]
fn affine_expressions_have_no_remainder() {
    let e = parse_expr("2*x1 - 3*x2 + 0.5", 2).unwrap();
    assert!(e.is_affine());
    let bx = IntervalVector::from_slices(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let rem = lagrange_remainder(&[e], &DVector::zeros(2), &bx).unwrap();
    assert!(rem.is_zero());
}
