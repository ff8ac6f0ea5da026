mod common;

use common::{check_intersection, constrained2, intersect_case, rng, CzMember, CzSampler, IntersectOp};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use reachstl::constrain::{intersect_cz, intersect_zono, Gain};
use reachstl::setalg::{ConstrainedZonotope, VolumeMethod, Zonotope};
use reachstl::stl::Predicate;

fn run(op: IntersectOp, case_seed: u64, sample_seed: u64) -> Result<(), TestCaseError> {
    let case = common::draw(intersect_case(op), 1, case_seed).pop().unwrap();
    let kept = check_intersection(&case, 2000, sample_seed).map_err(TestCaseError::fail)?;
    // The cut is placed through the set, so rejection always finds points.
    prop_assert!(kept >= 200, "only {kept} samples for {:?}", case);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zonotope_strip_enclosure_contains_intersection(a in any::<u64>(), b in any::<u64>()) {
        run(IntersectOp::ZonoLinear, a, b)?;
    }

    #[test]
    fn zonotope_nonlinear_enclosure_contains_intersection(a in any::<u64>(), b in any::<u64>()) {
        run(IntersectOp::ZonoNonlinear, a, b)?;
    }

    #[test]
    fn constrained_strip_enclosure_contains_intersection(a in any::<u64>(), b in any::<u64>()) {
        run(IntersectOp::CzLinear, a, b)?;
    }

    #[test]
    fn constrained_nonlinear_enclosure_contains_intersection(a in any::<u64>(), b in any::<u64>()) {
        run(IntersectOp::CzNonlinear, a, b)?;
    }

    #[test]
    fn linear_cz_intersection_is_exact(c in constrained2(), angle in 0.0..3.1f64, seed in any::<u64>()) {
        // Points of the input outside the strip must be rejected by the result.
        let mid = c.tight_interval_hull().unwrap().unwrap().center();
        let pred = common::cutting_strip(&mid, 0.5, angle, 0.0, 0.2);
        let out = intersect_cz(&c, &pred).unwrap();
        let sampler = CzSampler::new(&c);
        let member = CzMember::new(&out);
        let mut r = rng(seed);
        for _ in 0..200 {
            let Some(p) = sampler.sample(&mut r, 1000) else { continue };
            let margin = pred.margin(p.as_slice()).unwrap();
            if margin.abs() > 1e-6 {
                prop_assert_eq!(member.contains(&p), margin > 0.0);
            }
        }
    }
}

#[test]
fn auto_gain_never_enlarges() {
    for case in common::draw(intersect_case(IntersectOp::ZonoLinear), 200, 3) {
        let common::CaseSet::Zono(z) = &case.set else {
            unreachable!()
        };
        let out = intersect_zono(z, &case.pred, &Gain::Auto).unwrap();
        let (a, b) = (
            z.volume(VolumeMethod::Exact2d).unwrap(),
            out.volume(VolumeMethod::Exact2d).unwrap(),
        );
        assert!(b <= a + 1e-9, "{b} > {a}");
    }
}

#[test]
fn disjoint_strip_gives_empty_constrained_set() {
    let c: ConstrainedZonotope =
        ConstrainedZonotope::from_zonotope(&Zonotope::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap());
    let pred = Predicate::linear_row("far", &[1.0, 0.0], 3.0, 0.5).unwrap();
    assert!(intersect_cz(&c, &pred).unwrap().is_empty().unwrap());
}
