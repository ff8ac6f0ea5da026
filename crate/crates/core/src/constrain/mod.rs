//! Intersection of reachable sets with predicate strips, for zonotopes
//! (gain-based enclosure) and constrained zonotopes (exact up to the
//! linearization remainder), plus the per-step pipeline that combines them
//! with the data-driven recursion.

mod gain;
mod intersect;
mod pipeline;
mod remainder;

use thiserror::Error;

use crate::expr::ExprError;
use crate::reach::ReachError;
use crate::setalg::SetError;
use crate::stl::StlError;

pub use gain::{optimal_gain, Gain};
pub use intersect::{
    intersect_cz, intersect_cz_linear, intersect_cz_nonlinear, intersect_zono, intersect_zono_linear,
    intersect_zono_nonlinear,
};
pub use pipeline::{
    apply_schedule_cz, apply_schedule_zono, constrain_cz, constrain_zono, run_pipeline, run_pipeline_with,
    PipelineOptions, PipelineOutput, Representation,
};
pub use remainder::{lagrange_remainder, LagrangeRemainder};

#[derive(Debug, Error)]
pub enum ConstrainError {
    #[error("predicate `{name}`: {source}")]
    Predicate { name: String, source: ExprError },
    #[error("{0}")]
    Expr(#[from] ExprError),
    #[error("gain matrix is {found:?}, expected {expected:?}")]
    GainShape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("predicate `{name}` acts on {found}-dimensional states, set has dimension {expected}")]
    PredicateDimension {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("side information inconsistent with data-driven set: constrained set is empty at step {step}")]
    EmptySet { step: usize },
    #[error("schedule covers {schedule} steps but {sets} sets were given")]
    ScheduleLength { schedule: usize, sets: usize },
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Reach(#[from] ReachError),
}
