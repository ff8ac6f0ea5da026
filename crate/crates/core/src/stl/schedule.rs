use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Formula, PredicateTable, StlError};

/// Witness windows for `F`/`U` nodes: node id (pre-order among `F`/`U`
/// nodes) to an inclusive step range relative to the time the node is
/// evaluated.
pub type Instantiations = BTreeMap<usize, (usize, usize)>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    #[serde(default)]
    pub instantiations: Instantiations,
    /// Treat an uninstantiated `F`/`U` as witnessed at its deadline step.
    /// Only sound when that is known to be the case.
    #[serde(default)]
    pub assume_f_at_deadline: bool,
}

/// Relative steps `j` with `a ≤ j·dt ≤ b`, rounded inward; `None` if the
/// window contains no sample.
pub fn step_window(a: f64, b: f64, dt: f64) -> Option<(usize, usize)> {
    // Guards against a/dt landing a hair above an integer because of
    // representation error.
    let fudge = 1e-9;
    let lo = (a / dt - fudge).ceil().max(0.0);
    let hi = (b / dt + fudge).floor();
    (hi >= lo).then_some((lo as usize, hi as usize))
}

/// Predicates active at each step `0..=horizon`, in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateSchedule {
    pub horizon: usize,
    pub dt: f64,
    pub active: Vec<Vec<String>>,
}

impl PredicateSchedule {
    pub fn empty(horizon: usize, dt: f64) -> Self {
        Self {
            horizon,
            dt,
            active: vec![Vec::new(); horizon + 1],
        }
    }

    pub fn at(&self, k: usize) -> &[String] {
        self.active.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.active.iter().all(Vec::is_empty)
    }

    /// Steps at which `name` is active.
    pub fn steps_of(&self, name: &str) -> Vec<usize> {
        (0..self.active.len())
            .filter(|k| self.active[*k].iter().any(|n| n == name))
            .collect()
    }
}

struct Compiler<'a> {
    table: &'a PredicateTable,
    dt: f64,
    opts: &'a ScheduleOptions,
    next_id: usize,
    marks: BTreeMap<usize, Vec<String>>,
}

impl Compiler<'_> {
    fn mark(&mut self, names: &[String], steps: &[usize]) {
        for &k in steps {
            let entry = self.marks.entry(k).or_default();
            for n in names {
                if !entry.contains(n) {
                    entry.push(n.clone());
                }
            }
        }
    }

    fn shifted(steps: &[usize], lo: usize, hi: usize) -> Vec<usize> {
        let mut out: Vec<usize> = steps.iter().flat_map(|k| (lo..=hi).map(move |j| k + j)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn witness(&self, id: usize, a: f64, b: f64) -> Result<Option<(usize, usize)>, StlError> {
        let window = step_window(a, b, self.dt);
        if let Some(&(lo, hi)) = self.opts.instantiations.get(&id) {
            let fits = window.is_some_and(|(min, max)| min <= lo && lo <= hi && hi <= max);
            if !fits {
                let (min, max) = window.unwrap_or((1, 0));
                return Err(StlError::InstantiationOutOfWindow {
                    node: id,
                    lo,
                    hi,
                    min,
                    max,
                });
            }
            return Ok(Some((lo, hi)));
        }
        if self.opts.assume_f_at_deadline {
            return Ok(window.map(|(_, hi)| (hi, hi)));
        }
        Ok(None)
    }

    /// Records the predicates implied by `f` holding at every step in `steps`.
    fn visit(&mut self, f: &Formula, steps: &[usize]) -> Result<(), StlError> {
        match f {
            Formula::Atom(name) => {
                let preds = self.table.resolve_atom(name)?;
                self.mark(&preds, steps);
            }
            Formula::And(l, r) => {
                let region = f
                    .conjunct_atoms()
                    .and_then(|s| self.table.region(&s).map(<[String]>::to_vec));
                match region {
                    Some(preds) => self.mark(&preds, steps),
                    None => {
                        self.visit(l, steps)?;
                        self.visit(r, steps)?;
                    }
                }
            }
            Formula::Always { a, b, body } => {
                if let Some((lo, hi)) = step_window(*a, *b, self.dt) {
                    let inner = Self::shifted(steps, lo, hi);
                    self.visit(body, &inner)?;
                }
            }
            Formula::Eventually { a, b, body } => {
                let id = self.next_id;
                self.next_id += 1;
                match self.witness(id, *a, *b)? {
                    Some((lo, hi)) => {
                        let inner = Self::shifted(steps, lo, hi);
                        self.visit(body, &inner)?;
                    }
                    // Still walk the body so nested node ids stay aligned.
                    None => self.visit(body, &[])?,
                }
            }
            Formula::Until { a, b, left, right } => {
                let id = self.next_id;
                self.next_id += 1;
                match self.witness(id, *a, *b)? {
                    Some((lo, hi)) => {
                        let before = Self::shifted(steps, 0, lo);
                        let after = Self::shifted(steps, lo, hi);
                        self.visit(left, &before)?;
                        self.visit(right, &after)?;
                    }
                    None => {
                        self.visit(left, &[])?;
                        self.visit(right, &[])?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Turns `f` (known to hold at time 0) into per-step predicate activations.
///
/// `G[a,b]` activates its body at every step inside the window, rounded
/// inward. `F` and `U` contribute only through an instantiation window (or
/// at the deadline step when `assume_f_at_deadline` is set); without one an
/// eventuality says nothing about any particular step.
pub fn compile_schedule(
    f: &Formula,
    table: &PredicateTable,
    dt: f64,
    horizon: usize,
    opts: &ScheduleOptions,
) -> Result<PredicateSchedule, StlError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(StlError::InvalidDt(dt));
    }
    let ids = f.eventual_nodes().len();
    if let Some((&bad, _)) = opts.instantiations.iter().find(|(id, _)| **id >= ids) {
        return Err(StlError::UnknownInstantiation(bad));
    }
    let needed = (f.horizon() / dt + 1e-9).floor() as usize;
    if needed > horizon {
        return Err(StlError::HorizonTooShort { needed, horizon });
    }
    let mut c = Compiler {
        table,
        dt,
        opts,
        next_id: 0,
        marks: BTreeMap::new(),
    };
    c.visit(f, &[0])?;
    let mut sched = PredicateSchedule::empty(horizon, dt);
    for (k, mut names) in c.marks {
        if k > horizon {
            return Err(StlError::HorizonTooShort { needed: k, horizon });
        }
        names.sort_by_key(|n| table.position(n));
        sched.active[k] = names;
    }
    Ok(sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse_formula, Predicate};

    fn single() -> PredicateTable {
        PredicateTable::new().with(Predicate::linear_row("p", &[1.0], 0.0, 1.0).unwrap())
    }

    #[test]
    fn window_rounding() {
        assert_eq!(step_window(0.0, 25.0, 1.0), Some((0, 25)));
        assert_eq!(step_window(0.5, 1.0, 0.4), Some((2, 2)));
        assert_eq!(step_window(0.1, 0.3, 0.4), None);
        assert_eq!(step_window(0.3, 0.9, 0.1), Some((3, 9)));
    }

    #[test]
    fn point_window() {
        let t = single();
        let f = parse_formula("G[0,0](p)", &t).unwrap();
        let s = compile_schedule(&f, &t, 1.0, 3, &ScheduleOptions::default()).unwrap();
        assert_eq!(s.steps_of("p"), vec![0]);
    }

    #[test]
    fn nested_always_composes() {
        let t = single();
        let f = parse_formula("G[0,10](G[0,5](p))", &t).unwrap();
        let s = compile_schedule(&f, &t, 1.0, 20, &ScheduleOptions::default()).unwrap();
        assert_eq!(s.steps_of("p"), (0..=15).collect::<Vec<_>>());
    }

    #[test]
    fn eventually_needs_a_witness() {
        let t = single();
        let f = parse_formula("F[2,6](p)", &t).unwrap();
        let none = compile_schedule(&f, &t, 1.0, 6, &ScheduleOptions::default()).unwrap();
        assert!(none.is_empty());
        let deadline = ScheduleOptions {
            assume_f_at_deadline: true,
            ..Default::default()
        };
        let s = compile_schedule(&f, &t, 1.0, 6, &deadline).unwrap();
        assert_eq!(s.steps_of("p"), vec![6]);
        let inst = ScheduleOptions {
            instantiations: [(0, (3, 4))].into(),
            ..Default::default()
        };
        let s = compile_schedule(&f, &t, 1.0, 6, &inst).unwrap();
        assert_eq!(s.steps_of("p"), vec![3, 4]);
        let outside = ScheduleOptions {
            instantiations: [(0, (1, 4))].into(),
            ..Default::default()
        };
        assert!(matches!(
            compile_schedule(&f, &t, 1.0, 6, &outside),
            Err(StlError::InstantiationOutOfWindow { .. })
        ));
        let unknown = ScheduleOptions {
            instantiations: [(3, (3, 4))].into(),
            ..Default::default()
        };
        assert_eq!(
            compile_schedule(&f, &t, 1.0, 6, &unknown),
            Err(StlError::UnknownInstantiation(3))
        );
    }

    #[test]
    fn horizon_must_cover_windows() {
        let t = single();
        let f = parse_formula("G[0,10](p)", &t).unwrap();
        assert_eq!(
            compile_schedule(&f, &t, 1.0, 5, &ScheduleOptions::default()),
            Err(StlError::HorizonTooShort { needed: 10, horizon: 5 })
        );
    }

    #[test]
    fn until_activation() {
        let t = PredicateTable::new()
            .with(Predicate::linear_row("a", &[1.0], 0.0, 1.0).unwrap())
            .with(Predicate::linear_row("b", &[1.0], 0.0, 2.0).unwrap());
        let f = parse_formula("(a) U[2,5] (b)", &t).unwrap();
        let opts = ScheduleOptions {
            instantiations: [(0, (3, 3))].into(),
            ..Default::default()
        };
        let s = compile_schedule(&f, &t, 1.0, 5, &opts).unwrap();
        assert_eq!(s.steps_of("a"), vec![0, 1, 2, 3]);
        assert_eq!(s.steps_of("b"), vec![3]);
        assert_eq!(s.at(3), ["a".to_string(), "b".to_string()]);
    }
}
