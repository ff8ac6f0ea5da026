//! Stable process exit codes and the mapping from library errors onto them.

use reachstl::constrain::ConstrainError;
use reachstl::expr::ExprError;
use reachstl::reach::ReachError;
use reachstl::scenarios::ScenarioError;
use reachstl::setalg::SetError;
use reachstl::stl::StlError;

pub const IO: u8 = 1;
pub const INVALID: u8 = 2;
pub const EMPTY_SET: u8 = 3;
pub const AUDIT_VIOLATION: u8 = 4;
pub const SOLVER: u8 = 5;
pub const EXPR_DOMAIN: u8 = 6;

fn expr(e: &ExprError) -> u8 {
    match e {
        ExprError::DivisionByZero | ExprError::SqrtOfNegative(_) | ExprError::Kink { .. } | ExprError::Domain(_) => {
            EXPR_DOMAIN
        }
        _ => INVALID,
    }
}

fn set(e: &SetError) -> u8 {
    match e {
        SetError::Solver(_) => SOLVER,
        _ => INVALID,
    }
}

fn reach(e: &ReachError) -> u8 {
    match e {
        ReachError::Io(_) => IO,
        ReachError::Set(s) => set(s),
        _ => INVALID,
    }
}

fn stl(e: &StlError) -> u8 {
    match e {
        StlError::Expr { source, .. } => expr(source),
        _ => INVALID,
    }
}

fn constrain(e: &ConstrainError) -> u8 {
    match e {
        ConstrainError::EmptySet { .. } => EMPTY_SET,
        ConstrainError::Predicate { source, .. } | ConstrainError::Expr(source) => expr(source),
        ConstrainError::Set(s) => set(s),
        ConstrainError::Stl(s) => stl(s),
        ConstrainError::Reach(r) => reach(r),
        _ => INVALID,
    }
}

pub fn code(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::Io { .. } => IO,
        ScenarioError::Constrain { source, .. } => constrain(source),
        ScenarioError::PredicateExpr { source, .. } => expr(source),
        ScenarioError::Reach(r) => reach(r),
        ScenarioError::Stl(s) => stl(s),
        ScenarioError::Set(s) => set(s),
        _ => INVALID,
    }
}
