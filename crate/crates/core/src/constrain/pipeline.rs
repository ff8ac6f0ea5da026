use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::gain::Gain;
use super::intersect::{intersect_cz, intersect_zono};
use super::ConstrainError;
use crate::reach::{ReachConfig, ReachError, Reacher, TrajectoryDataset};
use crate::setalg::{ConstrainedZonotope, Zonotope};
use crate::stl::{PredicateSchedule, PredicateTable};
use crate::Scalar;

/// Which set families the pipeline computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Zonotope,
    Constrained,
    #[default]
    Both,
}

impl Representation {
    pub fn zonotope(self) -> bool {
        matches!(self, Self::Zonotope | Self::Both)
    }

    pub fn constrained(self) -> bool {
        matches!(self, Self::Constrained | Self::Both)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions<T: Scalar = f64> {
    /// Seed step `k + 1` with the constrained set of step `k`. When false the
    /// schedule is applied after the fact to the unconstrained sequence.
    pub feedback: bool,
    pub gain: Gain<T>,
    pub representation: Representation,
}

impl<T: Scalar> Default for PipelineOptions<T> {
    fn default() -> Self {
        Self {
            feedback: true,
            gain: Gain::Auto,
            representation: Representation::Both,
        }
    }
}

/// Sets `0..=N` of each family. Families that were not requested are empty.
#[derive(Debug, Clone)]
pub struct PipelineOutput<T: Scalar = f64> {
    /// Plain data-driven recursion, no side information.
    pub unconstrained: Vec<Zonotope<T>>,
    pub zonotopes: Vec<Zonotope<T>>,
    pub constrained: Vec<ConstrainedZonotope<T>>,
}

fn check_length(schedule: &PredicateSchedule, sets: usize) -> Result<(), ConstrainError> {
    if schedule.active.len() < sets {
        Err(ConstrainError::ScheduleLength {
            schedule: schedule.active.len(),
            sets,
        })
    } else {
        Ok(())
    }
}

/// Folds the named predicates of `table` into `z`, in the given order.
pub fn constrain_zono<T: Scalar>(
    z: &Zonotope<T>,
    active: &[String],
    table: &PredicateTable,
    gain: &Gain<T>,
) -> Result<Zonotope<T>, ConstrainError> {
    active
        .iter()
        .try_fold(z.clone(), |acc, name| intersect_zono(&acc, table.get(name)?, gain))
}

/// Folds the named predicates of `table` into `c`, in the given order.
pub fn constrain_cz<T: Scalar>(
    c: &ConstrainedZonotope<T>,
    active: &[String],
    table: &PredicateTable,
) -> Result<ConstrainedZonotope<T>, ConstrainError> {
    active
        .iter()
        .try_fold(c.clone(), |acc, name| intersect_cz(&acc, table.get(name)?))
}

/// Folds the active predicates of each step into `sets[k]`, in declaration
/// order, with the zonotope enclosure.
pub fn apply_schedule_zono<T: Scalar>(
    sets: &[Zonotope<T>],
    schedule: &PredicateSchedule,
    table: &PredicateTable,
    gain: &Gain<T>,
) -> Result<Vec<Zonotope<T>>, ConstrainError> {
    check_length(schedule, sets.len())?;
    sets.iter()
        .enumerate()
        .map(|(k, z)| constrain_zono(z, schedule.at(k), table, gain))
        .collect()
}

/// As [`apply_schedule_zono`] with constrained zonotopes; each `sets[k]`
/// is lifted to a constraint-free constrained zonotope first. Emptiness is
/// not checked here.
pub fn apply_schedule_cz<T: Scalar>(
    sets: &[Zonotope<T>],
    schedule: &PredicateSchedule,
    table: &PredicateTable,
) -> Result<Vec<ConstrainedZonotope<T>>, ConstrainError> {
    check_length(schedule, sets.len())?;
    sets.iter()
        .enumerate()
        .map(|(k, z)| constrain_cz(&z.to_constrained(), schedule.at(k), table))
        .collect()
}

fn ensure_nonempty<T: Scalar>(c: &ConstrainedZonotope<T>, step: usize) -> Result<(), ConstrainError> {
    if c.is_empty()? {
        Err(ConstrainError::EmptySet { step })
    } else {
        Ok(())
    }
}

/// Runs the data-driven recursion for `config.horizon` steps together with
/// the side information in `schedule`.
///
/// With feedback, `Z̄_k` (resp. `C̄_k`) seeds step `k + 1`; constrained
/// zonotopes are then propagated without order reduction. Any constrained
/// zonotope that turns out empty at a step with active predicates stops the
/// run with [`ConstrainError::EmptySet`].
pub fn run_pipeline<T: Scalar>(
    config: &ReachConfig<T>,
    dataset: &TrajectoryDataset<T>,
    schedule: &PredicateSchedule,
    table: &PredicateTable,
    options: &PipelineOptions<T>,
) -> Result<PipelineOutput<T>, ConstrainError> {
    run_pipeline_with(config, dataset, schedule, |_| Cow::Borrowed(table), options)
}

/// [`run_pipeline`] with a predicate table per step, for side information
/// whose predicates move with the system (e.g. a region anchored at the
/// previous measurement).
pub fn run_pipeline_with<'a, T: Scalar, F>(
    config: &ReachConfig<T>,
    dataset: &TrajectoryDataset<T>,
    schedule: &PredicateSchedule,
    table_at: F,
    options: &PipelineOptions<T>,
) -> Result<PipelineOutput<T>, ConstrainError>
where
    F: Fn(usize) -> Cow<'a, PredicateTable>,
{
    let n_sets = config.horizon + 1;
    check_length(schedule, n_sets)?;
    let reacher = Reacher::from_config(config, dataset.clone())?;
    let input = |k: usize| {
        config
            .input_at(k)
            .ok_or_else(|| ReachError::InvalidConfig(format!("no input set for step {k}")))
    };

    let mut unconstrained = vec![config.initial.clone()];
    for k in 1..n_sets {
        let next = reacher.step(&unconstrained[k - 1], input(k)?)?;
        unconstrained.push(next);
    }

    let rep = options.representation;
    let mut zonotopes = Vec::new();
    let mut constrained = Vec::new();
    if !options.feedback {
        if rep.zonotope() {
            zonotopes = (0..n_sets)
                .map(|k| constrain_zono(&unconstrained[k], schedule.at(k), &table_at(k), &options.gain))
                .collect::<Result<_, _>>()?;
        }
        if rep.constrained() {
            for (k, z) in unconstrained.iter().enumerate() {
                let c = constrain_cz(&z.to_constrained(), schedule.at(k), &table_at(k))?;
                if !schedule.at(k).is_empty() {
                    ensure_nonempty(&c, k)?;
                }
                constrained.push(c);
            }
        }
        return Ok(PipelineOutput {
            unconstrained,
            zonotopes,
            constrained,
        });
    }

    if rep.zonotope() {
        let mut current = config.initial.clone();
        for k in 0..n_sets {
            if k > 0 {
                current = reacher.step(&current, input(k)?)?;
            }
            current = constrain_zono(&current, schedule.at(k), &table_at(k), &options.gain)?;
            zonotopes.push(current.clone());
        }
    }
    if rep.constrained() {
        let mut current = config.initial.to_constrained();
        for k in 0..n_sets {
            if k > 0 {
                current = reacher.step_cz(&current, input(k)?)?;
            }
            if !schedule.at(k).is_empty() {
                current = constrain_cz(&current, schedule.at(k), &table_at(k))?;
                ensure_nonempty(&current, k)?;
            }
            constrained.push(current.clone());
        }
    }
    Ok(PipelineOutput {
        unconstrained,
        zonotopes,
        constrained,
    })
}
