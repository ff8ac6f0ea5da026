use super::schedule::{step_window, ScheduleOptions};
use super::{Formula, PredicateTable, StlError};

struct Eval<'a, S> {
    table: &'a PredicateTable,
    signal: &'a [S],
    dt: f64,
    commit: Option<&'a ScheduleOptions>,
    // Pre-order id of the next F/U node, tracked so commitments can be
    // looked up by node.
    ids: Vec<(*const Formula, usize)>,
}

impl<S: AsRef<[f64]>> Eval<'_, S> {
    fn sample(&self, k: usize) -> Result<&[f64], StlError> {
        self.signal.get(k).map(AsRef::as_ref).ok_or(StlError::SignalTooShort {
            needed: k,
            len: self.signal.len(),
        })
    }

    fn atom(&self, name: &str, k: usize) -> Result<bool, StlError> {
        let x = self.sample(k)?;
        self.table.atom_holds(name, x)
    }

    fn node_id(&self, f: &Formula) -> Option<usize> {
        self.ids.iter().find(|(p, _)| std::ptr::eq(*p, f)).map(|(_, id)| *id)
    }

    fn commitment(&self, f: &Formula) -> Option<(usize, usize)> {
        let opts = self.commit?;
        let id = self.node_id(f)?;
        if let Some(w) = opts.instantiations.get(&id) {
            return Some(*w);
        }
        if opts.assume_f_at_deadline {
            let (a, b) = match f {
                Formula::Eventually { a, b, .. } | Formula::Until { a, b, .. } => (*a, *b),
                _ => return None,
            };
            return step_window(a, b, self.dt).map(|(_, hi)| (hi, hi));
        }
        None
    }

    // Every subformula is evaluated on its whole window (no short-circuit),
    // so a too-short signal is always reported.
    fn all(&self, f: &Formula, ks: impl Iterator<Item = usize>) -> Result<bool, StlError> {
        let mut ok = true;
        for k in ks {
            ok &= self.eval(f, k)?;
        }
        Ok(ok)
    }

    fn eval(&self, f: &Formula, k: usize) -> Result<bool, StlError> {
        match f {
            Formula::Atom(name) => self.atom(name, k),
            Formula::And(l, r) => {
                let mut v = self.eval(l, k)? & self.eval(r, k)?;
                if let Some(region) = f.conjunct_atoms().and_then(|s| self.table.region(&s)) {
                    let x = self.sample(k)?;
                    for p in region {
                        v &= self.table.get(p)?.holds(x)?;
                    }
                }
                Ok(v)
            }
            Formula::Always { a, b, body } => match step_window(*a, *b, self.dt) {
                Some((lo, hi)) => self.all(body, (lo..=hi).map(|j| k + j)),
                None => Ok(true),
            },
            Formula::Eventually { a, b, body } => {
                if let Some((lo, hi)) = self.commitment(f) {
                    return self.all(body, (lo..=hi).map(|j| k + j));
                }
                let Some((lo, hi)) = step_window(*a, *b, self.dt) else {
                    return Ok(false);
                };
                let mut any = false;
                for j in lo..=hi {
                    any |= self.eval(body, k + j)?;
                }
                Ok(any)
            }
            Formula::Until { a, b, left, right } => {
                if let Some((lo, hi)) = self.commitment(f) {
                    let r = self.all(right, (lo..=hi).map(|j| k + j))?;
                    let l = self.all(left, (0..=lo).map(|j| k + j))?;
                    return Ok(r && l);
                }
                let Some((lo, hi)) = step_window(*a, *b, self.dt) else {
                    return Ok(false);
                };
                let lefts: Vec<bool> = (0..=hi).map(|j| self.eval(left, k + j)).collect::<Result<_, _>>()?;
                let mut any = false;
                for j in lo..=hi {
                    let r = self.eval(right, k + j)?;
                    any |= r && lefts[..=j].iter().all(|v| *v);
                }
                Ok(any)
            }
        }
    }
}

fn start_index(t: f64, dt: f64) -> Result<usize, StlError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(StlError::InvalidDt(dt));
    }
    let k = (t / dt).round();
    if t < 0.0 || (k * dt - t).abs() > 1e-9 * dt.max(t.abs()) {
        return Err(StlError::OffGridTime { t, dt });
    }
    Ok(k as usize)
}

fn run<S: AsRef<[f64]>>(
    f: &Formula,
    table: &PredicateTable,
    signal: &[S],
    dt: f64,
    t: f64,
    commit: Option<&ScheduleOptions>,
) -> Result<bool, StlError> {
    let k = start_index(t, dt)?;
    let ids = f
        .eventual_nodes()
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n as *const Formula, i))
        .collect();
    Eval {
        table,
        signal,
        dt,
        commit,
        ids,
    }
    .eval(f, k)
}

/// Boolean satisfaction of `f` by the sampled signal at time `t`.
///
/// Sample `k` is taken at time `k·dt`; a window `[a, b]` evaluated at time
/// `t` covers the samples with `t + a ≤ k·dt ≤ t + b`.
pub fn monitor<S: AsRef<[f64]>>(
    f: &Formula,
    table: &PredicateTable,
    signal: &[S],
    dt: f64,
    t: f64,
) -> Result<bool, StlError> {
    run(f, table, signal, dt, t, None)
}

/// Satisfaction with the eventualities committed as in `opts`: an
/// instantiated `F` must hold on its whole instantiation window, and an
/// instantiated `U` must see its right side on the window and its left side
/// from the evaluation time up to the window start. This is the knowledge a
/// compiled schedule relies on, and it implies [`monitor`].
pub fn monitor_committed<S: AsRef<[f64]>>(
    f: &Formula,
    table: &PredicateTable,
    signal: &[S],
    dt: f64,
    t: f64,
    opts: &ScheduleOptions,
) -> Result<bool, StlError> {
    run(f, table, signal, dt, t, Some(opts))
}
