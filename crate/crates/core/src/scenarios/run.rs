use std::borrow::Cow;
use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::audit::{audit, AuditRow};
use super::builders::{build_heading_region_named, heading_rectangle};
use super::config::{AnalysisMode, DatasetSource, HeadingSpec, ScenarioConfig};
use super::report::ReportMetadata;
use super::system::{generate_dataset, SyntheticSystem};
use super::ScenarioError;
use crate::constrain::{constrain_cz, constrain_zono, ConstrainError, Gain};
use crate::parallel::pool;
use crate::reach::{Linearization, Reacher, TrajectoryDataset};
use crate::setalg::{ConstrainedZonotope, Zonotope};
use crate::stl::{compile_schedule, parse_formula, Predicate, PredicateSchedule, PredicateTable, ScheduleOptions};

/// The simulated measurements: `states[k + 1]` follows `states[k]` under
/// `inputs[k] = (v, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredRun {
    pub states: Vec<[f64; 2]>,
    pub inputs: Vec<[f64; 2]>,
}

/// The sets of one step for one formula.
#[derive(Debug, Clone)]
pub struct FormulaStep {
    pub name: String,
    pub active: Vec<String>,
    /// Definitions of the active predicates at this step.
    pub predicates: Vec<Predicate>,
    pub zonotope: Option<Zonotope>,
    pub constrained: Option<ConstrainedZonotope>,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: usize,
    /// Starting set of the step (single-step mode) or of the run (open loop,
    /// step 0 only).
    pub initial: Option<Zonotope>,
    /// Input set that produced this step.
    pub input: Option<Zonotope>,
    pub unconstrained: Zonotope,
    pub formulas: Vec<FormulaStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeRow {
    pub step: usize,
    /// `zonotope` or `constrained_zonotope`.
    pub representation: String,
    /// `none` or a formula name.
    pub constrained_by: String,
    pub volume: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub metadata: ReportMetadata,
    pub system: SyntheticSystem,
    pub run: MeasuredRun,
    pub steps: Vec<StepReport>,
    pub volumes: Vec<VolumeRow>,
    pub audit: Vec<AuditRow>,
}

impl ScenarioReport {
    /// Mean volume per `(representation, constrained_by)`.
    pub fn averages(&self) -> BTreeMap<(String, String), f64> {
        let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
        for row in &self.volumes {
            let e = sums
                .entry((row.representation.clone(), row.constrained_by.clone()))
                .or_insert((0.0, 0));
            e.0 += row.volume;
            e.1 += 1;
        }
        sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }

    pub fn average(&self, representation: &str, constrained_by: &str) -> Option<f64> {
        self.averages()
            .get(&(representation.to_string(), constrained_by.to_string()))
            .copied()
    }
}

/// A validated config with its predicate table and compiled schedules.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub system: SyntheticSystem,
    pub table: PredicateTable,
    /// Formula name and schedule over `0..=horizon`, in name order.
    pub schedules: Vec<(String, PredicateSchedule)>,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w < -std::f64::consts::PI {
        w + two_pi
    } else {
        w
    }
}

/// Keeps the rectangle's edges away from the `x2` axis, where the slope
/// form of the heading strips breaks down.
fn off_axis(theta: f64) -> f64 {
    const MIN: f64 = 0.08;
    let q = std::f64::consts::FRAC_PI_2;
    let m = (theta / q).round() * q;
    let d = theta - m;
    if d.abs() < MIN {
        m + if d < 0.0 { -MIN } else { MIN }
    } else {
        theta
    }
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let system = config.system.to_system()?;
        let table = config.predicate_table()?;
        let horizon = config.run.horizon;
        let heading_names: Vec<String> = config
            .heading
            .as_ref()
            .map(|h| h.predicates.to_vec())
            .unwrap_or_default();
        let mut schedules = Vec::new();
        for (name, text) in &config.formula {
            let wrap = |e| ScenarioError::Config(format!("formula `{name}`: {e}"));
            let f = parse_formula(text, &table).map_err(wrap)?;
            let opts = ScheduleOptions {
                instantiations: config.instantiations.get(name).cloned().unwrap_or_default(),
                assume_f_at_deadline: config.output.assume_f_at_deadline,
            };
            let mut s = compile_schedule(&f, &table, system.dt, horizon, &opts).map_err(wrap)?;
            // The heading rectangle is anchored at the previous state, so it
            // says nothing at step 0.
            s.active[0].retain(|p| !heading_names.contains(p));
            schedules.push((name.clone(), s));
        }
        Ok(Self {
            config,
            system,
            table,
            schedules,
        })
    }

    pub fn horizon(&self) -> usize {
        self.config.run.horizon
    }

    fn heading_of(&self, inputs: &[[f64; 2]], i: usize) -> f64 {
        if i == 0 {
            self.config.run.initial_heading
        } else {
            inputs[i - 1][1]
        }
    }

    fn heading_predicates(
        &self,
        h: &HeadingSpec,
        states: &[[f64; 2]],
        inputs: &[[f64; 2]],
        k: usize,
    ) -> Result<(Predicate, Predicate), ScenarioError> {
        let forward = h.forward.unwrap_or(self.system.speed[1] * self.system.dt);
        let theta = off_axis(self.heading_of(inputs, k - 1));
        let corners = heading_rectangle(
            states[k - 1],
            theta,
            -h.margin,
            forward + h.margin,
            forward * h.theta_c.sin() + h.margin,
        );
        build_heading_region_named(corners, &h.predicates[0], &h.predicates[1])
    }

    /// Predicate table in force at step `k`; needs `states[..k]` and
    /// `inputs[..k − 1]`.
    pub fn table_at(
        &self,
        states: &[[f64; 2]],
        inputs: &[[f64; 2]],
        k: usize,
    ) -> Result<Cow<'_, PredicateTable>, ScenarioError> {
        match &self.config.heading {
            Some(h) if k >= 1 => {
                let (p6, p7) = self.heading_predicates(h, states, inputs, k)?;
                let mut t = self.table.clone();
                t.insert(p6);
                t.insert(p7);
                Ok(Cow::Owned(t))
            }
            _ => Ok(Cow::Borrowed(&self.table)),
        }
    }

    /// True iff `x` satisfies every predicate any formula activates at `k`.
    fn consistent(&self, table: &PredicateTable, k: usize, x: [f64; 2]) -> Result<bool, ScenarioError> {
        for (_, s) in &self.schedules {
            for name in s.at(k) {
                if !table.get(name)?.holds(&x)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Simulates the measured run: the vehicle steers toward the reference
/// path (turning at most `0.8 θ_c` per step when a heading constraint is
/// configured) and each noise draw is repeated until the new state
/// satisfies every formula's predicates at that step.
pub fn simulate_run(scenario: &Scenario, seed: u64) -> Result<MeasuredRun, ScenarioError> {
    simulate(scenario, seed, true)
}

fn simulate(scenario: &Scenario, seed: u64, reject: bool) -> Result<MeasuredRun, ScenarioError> {
    let cfg = &scenario.config;
    let sys = &scenario.system;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = vec![cfg.run.start];
    let mut inputs: Vec<[f64; 2]> = Vec::new();
    if reject && !scenario.consistent(&scenario.table, 0, cfg.run.start)? {
        return Err(ScenarioError::RunStart);
    }
    // Rejection per step with backtracking: a state can satisfy the side
    // information yet leave no admissible successor, so after a local
    // budget earlier steps are redrawn, backing up further on each repeated
    // failure at the same depth.
    let local = (cfg.run.max_attempts / 20).max(1);
    let mut spent = 0usize;
    let mut k = 0usize;
    let mut stuck = (0usize, 0usize);
    while k < scenario.horizon() {
        let x = states[k];
        let u = waypoint_input(scenario, &inputs, x, k);
        inputs.push(u);
        let table = scenario.table_at(&states, &inputs, k + 1)?;
        let mut next = None;
        for _ in 0..local {
            let candidate = sys.step(x, u, sys.sample_noise(&mut rng));
            if !reject || scenario.consistent(&table, k + 1, candidate)? {
                next = Some(candidate);
                break;
            }
        }
        spent += local;
        match next {
            Some(next) => {
                states.push(next);
                k += 1;
            }
            None if spent >= cfg.run.max_attempts * scenario.horizon() => {
                return Err(ScenarioError::RunGeneration {
                    step: k + 1,
                    attempts: spent,
                });
            }
            None => {
                inputs.pop();
                stuck = if stuck.0 == k { (k, stuck.1 + 1) } else { (k, 1) };
                let back = stuck.1.min(k);
                for _ in 0..back {
                    states.pop();
                    inputs.pop();
                }
                k -= back;
            }
        }
    }
    Ok(MeasuredRun { states, inputs })
}

/// Waypoint-tracking input from state `x` at step `k`, with the turn rate
/// clipped below the heading bound when one is configured.
fn waypoint_input(scenario: &Scenario, inputs: &[[f64; 2]], x: [f64; 2], k: usize) -> [f64; 2] {
    let cfg = &scenario.config;
    let sys = &scenario.system;
    let target = cfg.run.reference(k + 1);
    let d = [target[0] - x[0], target[1] - x[1]];
    let dist = d[0].hypot(d[1]);
    let prev = scenario.heading_of(inputs, k);
    let mut theta = if dist > 1e-12 { d[1].atan2(d[0]) } else { prev };
    if let Some(h) = &cfg.heading {
        let turn = 0.8 * h.theta_c;
        theta = prev + wrap_angle(theta - prev).clamp(-turn, turn);
    }
    [(dist / sys.dt).clamp(sys.speed[0], sys.speed[1]), wrap_angle(theta)]
}

/// Generated or loaded historical data.
pub fn load_dataset(cfg: &ScenarioConfig, sys: &SyntheticSystem) -> Result<TrajectoryDataset, ScenarioError> {
    match &cfg.dataset {
        DatasetSource::Generate { points } => generate_dataset(sys, *points, cfg.seed),
        DatasetSource::Csv { path } => {
            let file = std::fs::File::open(path).map_err(|e| ScenarioError::io(path, e))?;
            let d = TrajectoryDataset::read_csv(std::io::BufReader::new(file))?;
            if d.state_dim() != 2 || d.input_dim() != 2 {
                return Err(ScenarioError::Config(format!(
                    "dataset must have 2 states and 2 inputs, found {} and {}",
                    d.state_dim(),
                    d.input_dim()
                )));
            }
            Ok(d)
        }
    }
}

fn box_zonotope(center: [f64; 2], radius: [f64; 2]) -> Zonotope {
    Zonotope::new(
        DVector::from_column_slice(&center),
        DMatrix::from_diagonal(&DVector::from_column_slice(&radius)),
    )
    .expect("2x2 generators")
    .pruned()
}

fn tag(formula: &str, step: usize) -> impl Fn(ConstrainError) -> ScenarioError + '_ {
    move |source| ScenarioError::Constrain {
        formula: formula.to_string(),
        step,
        source,
    }
}

fn check_nonempty(c: &ConstrainedZonotope, formula: &str, step: usize) -> Result<(), ScenarioError> {
    if c.is_empty()? {
        Err(tag(formula, step)(ConstrainError::EmptySet { step }))
    } else {
        Ok(())
    }
}

impl Scenario {
    /// The data-driven stepper for this scenario's reach settings.
    pub fn reacher(&self, dataset: &TrajectoryDataset) -> Result<Reacher, ScenarioError> {
        let r = &self.config.reach;
        Ok(Reacher::new(
            dataset.clone(),
            self.system.noise.clone(),
            r.lipschitz,
            r.covering_radius,
            r.max_order,
            Linearization::PerStep,
        )?)
    }
}

/// Reachable sets of every step for every formula.
pub fn analyze(scenario: &Scenario, reacher: &Reacher, run: &MeasuredRun) -> Result<Vec<StepReport>, ScenarioError> {
    match scenario.config.reach.mode {
        AnalysisMode::SingleStep => pool().install(|| {
            (1..=scenario.horizon())
                .into_par_iter()
                .map(|k| single_step(scenario, reacher, run, k))
                .collect()
        }),
        AnalysisMode::OpenLoop => open_loop(scenario, reacher, run),
    }
}

fn single_step(
    scenario: &Scenario,
    reacher: &Reacher,
    run: &MeasuredRun,
    k: usize,
) -> Result<StepReport, ScenarioError> {
    let cfg = &scenario.config;
    let rep = cfg.output.representation;
    let initial = box_zonotope(run.states[k - 1], cfg.reach.initial_radius);
    let input = box_zonotope(run.inputs[k - 1], cfg.reach.input_radius);
    let unconstrained = reacher.step(&initial, &input)?;
    let table = scenario.table_at(&run.states, &run.inputs, k)?;
    let mut formulas = Vec::new();
    for (name, schedule) in &scenario.schedules {
        let active = schedule.at(k).to_vec();
        let predicates = active
            .iter()
            .map(|p| table.get(p).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let zonotope = if rep.zonotope() {
            Some(constrain_zono(&unconstrained, &active, &table, &Gain::Auto).map_err(tag(name, k))?)
        } else {
            None
        };
        let constrained = if rep.constrained() {
            let c = constrain_cz(&unconstrained.to_constrained(), &active, &table).map_err(tag(name, k))?;
            if !active.is_empty() {
                check_nonempty(&c, name, k)?;
            }
            Some(c)
        } else {
            None
        };
        formulas.push(FormulaStep {
            name: name.clone(),
            active,
            predicates,
            zonotope,
            constrained,
        });
    }
    Ok(StepReport {
        step: k,
        initial: Some(initial),
        input: Some(input),
        unconstrained,
        formulas,
    })
}

fn open_loop(scenario: &Scenario, reacher: &Reacher, run: &MeasuredRun) -> Result<Vec<StepReport>, ScenarioError> {
    let cfg = &scenario.config;
    let rep = cfg.output.representation;
    let n = scenario.horizon();
    let initial = box_zonotope(run.states[0], cfg.reach.initial_radius);
    let inputs: Vec<Zonotope> = run
        .inputs
        .iter()
        .map(|u| box_zonotope(*u, cfg.reach.input_radius))
        .collect();
    let mut unconstrained = vec![initial.clone()];
    for k in 1..=n {
        let next = reacher.step(&unconstrained[k - 1], &inputs[k - 1])?;
        unconstrained.push(next);
    }
    let tables = (0..=n)
        .map(|k| scenario.table_at(&run.states, &run.inputs, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut steps: Vec<StepReport> = (0..=n)
        .map(|k| StepReport {
            step: k,
            initial: (k == 0).then(|| initial.clone()),
            input: (k > 0).then(|| inputs[k - 1].clone()),
            unconstrained: unconstrained[k].clone(),
            formulas: Vec::new(),
        })
        .collect();
    for (name, schedule) in &scenario.schedules {
        let mut zono: Option<Zonotope> = None;
        let mut cz: Option<ConstrainedZonotope> = None;
        for k in 0..=n {
            let active = schedule.at(k).to_vec();
            let table = &tables[k];
            let zonotope = if rep.zonotope() {
                let base = match (&zono, cfg.reach.feedback, k) {
                    (Some(prev), true, k) if k > 0 => reacher.step(prev, &inputs[k - 1])?,
                    _ => unconstrained[k].clone(),
                };
                let z = constrain_zono(&base, &active, table, &Gain::Auto).map_err(tag(name, k))?;
                zono = Some(z.clone());
                Some(z)
            } else {
                None
            };
            let constrained = if rep.constrained() {
                let base = match (&cz, cfg.reach.feedback, k) {
                    (Some(prev), true, k) if k > 0 => reacher.step_cz(prev, &inputs[k - 1])?,
                    _ => unconstrained[k].to_constrained(),
                };
                let c = constrain_cz(&base, &active, table).map_err(tag(name, k))?;
                if !active.is_empty() {
                    check_nonempty(&c, name, k)?;
                }
                cz = Some(c.clone());
                Some(c)
            } else {
                None
            };
            let predicates = active
                .iter()
                .map(|p| table.get(p).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            steps[k].formulas.push(FormulaStep {
                name: name.clone(),
                active,
                predicates,
                zonotope,
                constrained,
            });
        }
    }
    Ok(steps)
}

/// Volumes of every set in `steps`.
pub(crate) fn volumes(
    steps: &[StepReport],
    method: crate::setalg::VolumeMethod,
) -> Result<Vec<VolumeRow>, ScenarioError> {
    let per_step: Result<Vec<Vec<VolumeRow>>, ScenarioError> = pool().install(|| {
        steps
            .par_iter()
            .map(|s| {
                let mut rows = vec![VolumeRow {
                    step: s.step,
                    representation: "zonotope".into(),
                    constrained_by: "none".into(),
                    volume: s.unconstrained.volume(method)?,
                }];
                for f in &s.formulas {
                    if let Some(z) = &f.zonotope {
                        rows.push(VolumeRow {
                            step: s.step,
                            representation: "zonotope".into(),
                            constrained_by: f.name.clone(),
                            volume: z.volume(method)?,
                        });
                    }
                    if let Some(c) = &f.constrained {
                        rows.push(VolumeRow {
                            step: s.step,
                            representation: "constrained_zonotope".into(),
                            constrained_by: f.name.clone(),
                            volume: c.volume(method)?,
                        });
                    }
                }
                Ok(rows)
            })
            .collect()
    });
    Ok(per_step?.into_iter().flatten().collect())
}

/// Dataset, measured run, reachable sets, volumes and inclusion audit.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let scenario = Scenario::new(config.clone())?;
    let dataset = load_dataset(config, &scenario.system)?;
    let reacher = scenario.reacher(&dataset)?;
    let (run, steps) = match simulate_run(&scenario, config.seed.wrapping_add(1)) {
        Ok(run) => {
            let steps = analyze(&scenario, &reacher, &run)?;
            (run, steps)
        }
        // No consistent measured run exists. Analyze an unfiltered one so a
        // contradiction in the side information surfaces as an empty set.
        Err(e @ (ScenarioError::RunStart | ScenarioError::RunGeneration { .. })) => {
            let raw = simulate(&scenario, config.seed.wrapping_add(1), false)?;
            analyze(&scenario, &reacher, &raw)?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let volumes = volumes(&steps, config.output.volume)?;
    let (lipschitz, covering_radius) = (reacher.lipschitz(), reacher.covering_radius());
    let metadata = ReportMetadata::new(config, dataset.num_points(), lipschitz, covering_radius);
    let mut report = ScenarioReport {
        metadata,
        system: scenario.system.clone(),
        run,
        steps,
        volumes,
        audit: Vec::new(),
    };
    report.audit = audit(&report, config.output.audit_samples, config.seed.wrapping_add(2))?;
    Ok(report)
}
