use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::AnalysisMode;
use super::run::{ScenarioReport, StepReport};
use super::system::sample_zonotope;
use super::ScenarioError;
use crate::parallel::{pool, shard_sizes, SHARDS};
use crate::setalg::{ConstrainedZonotope, Polygon, SetError, Zonotope};
use crate::stl::Predicate;

/// Candidate draws allowed per kept sample before a shard gives up.
const ATTEMPTS_PER_SAMPLE: usize = 1000;

/// Inclusion audit result for one set.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub step: usize,
    pub constrained_by: String,
    pub representation: String,
    /// Side-information-consistent samples kept.
    pub samples: usize,
    /// Candidate draws, including rejected ones.
    pub attempts: usize,
    pub violations: usize,
}

pub fn total_violations(rows: &[AuditRow]) -> usize {
    rows.iter().map(|r| r.violations).sum()
}

enum Member<'a> {
    Zono(&'a Zonotope),
    /// The polygon is built from support points, so it lies inside the set:
    /// points inside it are members without solving an LP.
    Cz(&'a ConstrainedZonotope, Polygon),
}

impl Member<'_> {
    fn contains(&self, x: &DVector<f64>) -> Result<bool, SetError> {
        match self {
            Member::Zono(z) => z.contains_point(x),
            Member::Cz(c, poly) => {
                if poly.len() >= 3 && inside_convex(poly, [x[0], x[1]]) {
                    return Ok(true);
                }
                c.contains_point(x)
            }
        }
    }
}

fn inside_convex(poly: &Polygon, p: [f64; 2]) -> bool {
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

/// Predicates a sample must satisfy and the sets it must lie in.
struct Group<'a> {
    name: String,
    predicates: &'a [Predicate],
    sets: Vec<(&'static str, Member<'a>)>,
}

fn groups(step: &StepReport) -> Result<Vec<Group<'_>>, SetError> {
    let mut out = vec![Group {
        name: "none".into(),
        predicates: &[],
        sets: vec![("zonotope", Member::Zono(&step.unconstrained))],
    }];
    for f in &step.formulas {
        let mut sets = Vec::new();
        if let Some(z) = &f.zonotope {
            sets.push(("zonotope", Member::Zono(z)));
        }
        if let Some(c) = &f.constrained {
            let poly = if c.dim() == 2 { c.polygon()? } else { Vec::new() };
            sets.push(("constrained_zonotope", Member::Cz(c, poly)));
        }
        out.push(Group {
            name: f.name.clone(),
            predicates: &f.predicates,
            sets,
        });
    }
    Ok(out)
}

fn satisfies(predicates: &[Predicate], x: &[f64]) -> Result<bool, ScenarioError> {
    for p in predicates {
        if !p.holds(x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Default, Clone)]
struct Tally {
    kept: usize,
    attempts: usize,
    violations: Vec<usize>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.kept += other.kept;
        self.attempts += other.attempts;
        if self.violations.len() < other.violations.len() {
            self.violations.resize(other.violations.len(), 0);
        }
        for (a, b) in self.violations.iter_mut().zip(other.violations) {
            *a += b;
        }
        self
    }
}

/// Monte Carlo inclusion audit.
///
/// Single-step reports: for every step and every formula (plus the
/// unconstrained set), `samples` one-step successors `f(x, u) + w` with
/// `x`, `u`, `w` drawn from the step's initial, input and noise sets are
/// kept if they satisfy the formula's predicates at that step, and each kept
/// successor is tested for membership. Open-loop reports draw whole
/// trajectories instead and reject a trajectory if any step violates its
/// predicates.
///
/// Sampling is split into fixed shards; shard `i` of job `j` uses seed
/// `seed + j·SHARDS + i`, so counts do not depend on the thread count.
pub fn audit(report: &ScenarioReport, samples: usize, seed: u64) -> Result<Vec<AuditRow>, ScenarioError> {
    if samples == 0 {
        return Err(ScenarioError::Config("audit needs at least one sample".into()));
    }
    match report.metadata.mode {
        AnalysisMode::SingleStep => audit_single_step(report, samples, seed),
        AnalysisMode::OpenLoop => audit_open_loop(report, samples, seed),
    }
}

fn missing(what: &str, step: usize) -> ScenarioError {
    ScenarioError::Report(format!("step {step} has no {what} set to sample from"))
}

fn audit_single_step(report: &ScenarioReport, samples: usize, seed: u64) -> Result<Vec<AuditRow>, ScenarioError> {
    let sys = &report.system;
    let prepared: Vec<Vec<Group>> = report.steps.iter().map(groups).collect::<Result<_, _>>()?;
    let mut jobs = Vec::new();
    for (si, gs) in prepared.iter().enumerate() {
        for gi in 0..gs.len() {
            jobs.push((si, gi));
        }
    }
    let sizes = shard_sizes(samples);
    let tallies: Result<Vec<Tally>, ScenarioError> = pool().install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(j, &(si, gi))| {
                let step = &report.steps[si];
                let group = &prepared[si][gi];
                let initial = step.initial.as_ref().ok_or_else(|| missing("initial", step.step))?;
                let input = step.input.as_ref().ok_or_else(|| missing("input", step.step))?;
                let mut total = Tally {
                    violations: vec![0; group.sets.len()],
                    ..Tally::default()
                };
                for (shard, &quota) in sizes.iter().enumerate() {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((j * SHARDS + shard) as u64));
                    let cap = quota.max(1) * ATTEMPTS_PER_SAMPLE;
                    let mut t = Tally {
                        violations: vec![0; group.sets.len()],
                        ..Tally::default()
                    };
                    while t.kept < quota && t.attempts < cap {
                        t.attempts += 1;
                        let x = sample_zonotope(initial, &mut rng);
                        let u = sample_zonotope(input, &mut rng);
                        let next = sys.step([x[0], x[1]], [u[0], u[1]], sys.sample_noise(&mut rng));
                        if !satisfies(group.predicates, &next)? {
                            continue;
                        }
                        t.kept += 1;
                        let p = DVector::from_column_slice(&next);
                        for (i, (_, set)) in group.sets.iter().enumerate() {
                            if !set.contains(&p)? {
                                t.violations[i] += 1;
                            }
                        }
                    }
                    total = total.merge(t);
                }
                Ok(total)
            })
            .collect()
    });
    let tallies = tallies?;
    let mut rows = Vec::new();
    for ((si, gi), t) in jobs.iter().zip(tallies) {
        let group = &prepared[*si][*gi];
        for (i, (rep, _)) in group.sets.iter().enumerate() {
            rows.push(AuditRow {
                step: report.steps[*si].step,
                constrained_by: group.name.clone(),
                representation: rep.to_string(),
                samples: t.kept,
                attempts: t.attempts,
                violations: t.violations[i],
            });
        }
    }
    Ok(rows)
}

fn audit_open_loop(report: &ScenarioReport, samples: usize, seed: u64) -> Result<Vec<AuditRow>, ScenarioError> {
    let sys = &report.system;
    let steps = &report.steps;
    let first = steps
        .first()
        .ok_or_else(|| ScenarioError::Report("report has no steps".into()))?;
    let initial = first.initial.as_ref().ok_or_else(|| missing("initial", first.step))?;
    let inputs: Vec<&Zonotope> = steps[1..]
        .iter()
        .map(|s| s.input.as_ref().ok_or_else(|| missing("input", s.step)))
        .collect::<Result<_, _>>()?;
    let prepared: Vec<Vec<Group>> = steps.iter().map(groups).collect::<Result<_, _>>()?;
    let n_groups = prepared[0].len();
    let sizes = shard_sizes(samples);
    // Violations are indexed by (step, set) within a group.
    let tallies: Result<Vec<Tally>, ScenarioError> = pool().install(|| {
        (0..n_groups)
            .into_par_iter()
            .map(|gi| {
                let width: Vec<usize> = prepared.iter().map(|g| g[gi].sets.len()).collect();
                let offsets: Vec<usize> = width
                    .iter()
                    .scan(0, |acc, w| {
                        let o = *acc;
                        *acc += w;
                        Some(o)
                    })
                    .collect();
                let slots: usize = width.iter().sum();
                let mut total = Tally {
                    violations: vec![0; slots],
                    ..Tally::default()
                };
                for (shard, &quota) in sizes.iter().enumerate() {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((gi * SHARDS + shard) as u64));
                    let cap = quota.max(1) * ATTEMPTS_PER_SAMPLE;
                    let mut t = Tally {
                        violations: vec![0; slots],
                        ..Tally::default()
                    };
                    'draw: while t.kept < quota && t.attempts < cap {
                        t.attempts += 1;
                        let x0 = sample_zonotope(initial, &mut rng);
                        let mut path = vec![[x0[0], x0[1]]];
                        if !satisfies(prepared[0][gi].predicates, &path[0])? {
                            continue;
                        }
                        for (k, input) in inputs.iter().enumerate() {
                            let u = sample_zonotope(input, &mut rng);
                            let next = sys.step(path[k], [u[0], u[1]], sys.sample_noise(&mut rng));
                            if !satisfies(prepared[k + 1][gi].predicates, &next)? {
                                continue 'draw;
                            }
                            path.push(next);
                        }
                        t.kept += 1;
                        for (k, x) in path.iter().enumerate() {
                            let p = DVector::from_column_slice(x);
                            for (i, (_, set)) in prepared[k][gi].sets.iter().enumerate() {
                                if !set.contains(&p)? {
                                    t.violations[offsets[k] + i] += 1;
                                }
                            }
                        }
                    }
                    total = total.merge(t);
                }
                Ok(total)
            })
            .collect()
    });
    let tallies = tallies?;
    let mut rows = Vec::new();
    for (k, step) in steps.iter().enumerate() {
        for (gi, t) in tallies.iter().enumerate() {
            let offset: usize = prepared[..k].iter().map(|g| g[gi].sets.len()).sum();
            for (i, (rep, _)) in prepared[k][gi].sets.iter().enumerate() {
                rows.push(AuditRow {
                    step: step.step,
                    constrained_by: prepared[k][gi].name.clone(),
                    representation: rep.to_string(),
                    samples: t.kept,
                    attempts: t.attempts,
                    violations: t.violations[offset + i],
                });
            }
        }
    }
    Ok(rows)
}
