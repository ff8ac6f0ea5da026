mod common;

use std::collections::BTreeMap;

use common::{
    all_signals, check_schedule, eventual_windows, formula, random_instantiations, random_signal, steps_needed,
    stl_table, Naive, ALPHABET,
};
use proptest::prelude::*;
use reachstl::stl::{compile_schedule, monitor, parse_formula, step_window, Instantiations, ScheduleOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn monitor_matches_naive_oracle(f in formula(6, 3, false).prop_filter("h <= 20", |f| f.horizon() <= 20.0),
                                    region in any::<bool>(), extra in 0..4usize, start in 0..3usize, seed in any::<u64>()) {
        let table = stl_table(region);
        let len = steps_needed(&f, 1.0) + 1 + extra + start;
        let sig = random_signal(len, seed);
        let naive = Naive { table: &table, signal: &sig, dt: 1.0, commit: &BTreeMap::new() };
        let got = monitor(&f, &table, &sig, 1.0, start as f64).unwrap();
        prop_assert_eq!(got, naive.eval(&f, start), "{}", f);
    }

    #[test]
    fn monitor_matches_oracle_on_half_second_windows(f in formula(8, 2, true), seed in any::<u64>()) {
        let table = stl_table(false);
        let dt = 1.0;
        let sig = random_signal(steps_needed(&f, dt) + 1, seed);
        let naive = Naive { table: &table, signal: &sig, dt, commit: &BTreeMap::new() };
        prop_assert_eq!(monitor(&f, &table, &sig, dt, 0.0).unwrap(), naive.eval(&f, 0), "{}", f);
    }

    #[test]
    fn printed_formula_parses_back(f in formula(6, 3, true), region in any::<bool>()) {
        let table = stl_table(region);
        let back = parse_formula(&f.to_string(), &table).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn too_short_signal_is_reported(f in formula(5, 2, false).prop_filter("temporal", |f| f.horizon() >= 1.0)) {
        let table = stl_table(false);
        let sig = random_signal(steps_needed(&f, 1.0), 1);
        prop_assert!(monitor(&f, &table, &sig, 1.0, 0.0).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn schedule_sound_by_brute_force(f in formula(3, 2, false).prop_filter("h <= 8", |f| f.horizon() <= 8.0),
                                     region in any::<bool>(), seed in any::<u64>()) {
        let table = stl_table(region);
        let opts = ScheduleOptions { instantiations: random_instantiations(&f, 1.0, seed), assume_f_at_deadline: false };
        check_schedule(&f, &table, &opts).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn deadline_assumption_is_a_commitment(f in formula(3, 2, false).prop_filter("h <= 8", |f| f.horizon() <= 8.0)) {
        let table = stl_table(false);
        // Committing every F/U to its last step is what the flag means.
        let mut inst = Instantiations::new();
        for (id, (a, b)) in eventual_windows(&f).into_iter().enumerate() {
            if let Some((_, hi)) = step_window(a, b, 1.0) {
                inst.insert(id, (hi, hi));
            }
        }
        let flag = ScheduleOptions { instantiations: Instantiations::new(), assume_f_at_deadline: true };
        let explicit = ScheduleOptions { instantiations: inst, assume_f_at_deadline: false };
        let h = steps_needed(&f, 1.0);
        prop_assert_eq!(
            compile_schedule(&f, &table, 1.0, h, &flag).unwrap(),
            compile_schedule(&f, &table, 1.0, h, &explicit).unwrap()
        );
        check_schedule(&f, &table, &explicit).map_err(TestCaseError::fail)?;
    }
}

/// Conjunctions of `G` over atoms: the schedule says exactly what the
/// formula says, so satisfying the schedule is also sufficient.
#[test]
fn always_fragment_schedule_is_exact() {
    let table = stl_table(false);
    for text in [
        "G[0,3](p)",
        "G[1,2](q) & G[0,4](G[0,1](s))",
        "p & G[2,5](q & s)",
        "G[0,2](p) & G[3,6](q)",
    ] {
        let f = parse_formula(text, &table).unwrap();
        let h = steps_needed(&f, 1.0);
        let sched = compile_schedule(&f, &table, 1.0, h, &ScheduleOptions::default()).unwrap();
        for sig in all_signals(&ALPHABET[..4], h + 1) {
            let facts = (0..=h).all(|k| {
                sched
                    .at(k)
                    .iter()
                    .all(|n| table.get(n).unwrap().holds(&sig[k]).unwrap())
            });
            assert_eq!(monitor(&f, &table, &sig, 1.0, 0.0).unwrap(), facts, "{text} on {sig:?}");
        }
    }
}
