//! Signal temporal logic fragment used as side information: predicates
//! (linear and nonlinear strips), formulas built from `G`, `F`, `U` and `&`,
//! a discrete-time monitor and the compiler that turns a formula into
//! per-step predicate activations.

mod formula;
mod monitor;
mod predicate;
mod schedule;

use thiserror::Error;

use crate::expr::ExprError;

pub use formula::{parse_formula, Formula};
pub use monitor::{monitor, monitor_committed};
pub use predicate::{Predicate, PredicateKind, PredicateTable};
pub use schedule::{compile_schedule, step_window, Instantiations, PredicateSchedule, ScheduleOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("negation is outside the supported fragment (line {line}, column {column})")]
    Negation { line: usize, column: usize },
    #[error("interval [{a}, {b}] has a > b")]
    InvalidWindow { a: f64, b: f64 },
    #[error("temporal bounds must be finite and nonnegative, found {0}")]
    Unbounded(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("invalid predicate `{name}`: {message}")]
    InvalidPredicate { name: String, message: String },
    #[error("predicate `{name}`: {source}")]
    Expr { name: String, source: ExprError },
    #[error("signal has {len} samples but the formula needs sample {needed}")]
    SignalTooShort { needed: usize, len: usize },
    #[error("sampling period must be positive, found {0}")]
    InvalidDt(f64),
    #[error("start time {t} is not a multiple of dt = {dt}")]
    OffGridTime { t: f64, dt: f64 },
    #[error("instantiation [{lo}, {hi}] for temporal node {node} lies outside its window steps [{min}, {max}]")]
    InstantiationOutOfWindow {
        node: usize,
        lo: usize,
        hi: usize,
        min: usize,
        max: usize,
    },
    #[error("instantiation given for node {0}, which is not an F or U node")]
    UnknownInstantiation(usize),
    #[error("formula reaches step {needed} but the horizon is {horizon}")]
    HorizonTooShort { needed: usize, horizon: usize },
}
