//! Set representations and the operations the reachability pipeline needs:
//! zonotopes, constrained zonotopes, matrix zonotopes and axis-aligned boxes.
//!
//! All values are immutable once built; every operation returns a new set.
//! Generator columns that are exactly zero are dropped after each operation.

mod constrained;
mod interval;
mod matrix_zonotope;
mod polygon;
mod serial;
mod volume;
mod zonotope;

pub use constrained::ConstrainedZonotope;
pub use interval::IntervalVector;
pub use matrix_zonotope::MatrixZonotope;
pub use polygon::{convex_hull_2d, polygon_area, Polygon};
pub use serial::SetJson;
pub use volume::VolumeMethod;
pub use zonotope::Zonotope;

use thiserror::Error;

/// Absolute residual tolerance used by membership and emptiness tests.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// Default generator-order budget for [`Zonotope::reduce_order`].
pub const DEFAULT_MAX_ORDER: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid interval at coordinate {index}: lower {lower} exceeds upper {upper}")]
    InvalidInterval { index: usize, lower: f64, upper: f64 },
    #[error("exact2d volume needs a 2-dimensional set, found dimension {0}")]
    NotTwoDimensional(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear program solver failed: {0}")]
    Solver(String),
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<(), SetError> {
    if expected == found {
        Ok(())
    } else {
        Err(SetError::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
