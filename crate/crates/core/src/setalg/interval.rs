use nalgebra::DVector;

use super::{check_dim, SetError};
use crate::Scalar;

/// Axis-aligned box `[lower, upper]` in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVector<T: Scalar = f64> {
    lower: DVector<T>,
    upper: DVector<T>,
}

impl<T: Scalar> IntervalVector<T> {
    pub fn new(lower: DVector<T>, upper: DVector<T>) -> Result<Self, SetError> {
        check_dim("interval bounds", lower.len(), upper.len())?;
        for i in 0..lower.len() {
            if !(lower[i] <= upper[i]) {
                return Err(SetError::InvalidInterval {
                    index: i,
                    lower: lower[i].to_f64_lossy(),
                    upper: upper[i].to_f64_lossy(),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_slices(lower: &[T], upper: &[T]) -> Result<Self, SetError> {
        Self::new(DVector::from_column_slice(lower), DVector::from_column_slice(upper))
    }

    /// Degenerate box at a single point.
    pub fn point(x: DVector<T>) -> Self {
        Self {
            lower: x.clone(),
            upper: x,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<T> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<T> {
        &self.upper
    }

    pub fn center(&self) -> DVector<T> {
        (&self.lower + &self.upper) * T::lit(0.5)
    }

    /// Half-widths.
    pub fn radius(&self) -> DVector<T> {
        (&self.upper - &self.lower) * T::lit(0.5)
    }

    pub fn volume(&self) -> T {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .fold(T::one(), |acc, (l, u)| acc * (*u - *l))
    }

    pub fn contains(&self, x: &DVector<T>, tol: T) -> bool {
        x.len() == self.dim() && (0..x.len()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    /// Smallest box containing both `self` and `x`.
    pub fn expand_to(&self, x: &DVector<T>) -> Self {
        let lower = self.lower.zip_map(x, |a, b| a.min(b));
        let upper = self.upper.zip_map(x, |a, b| a.max(b));
        Self { lower, upper }
    }

    /// Smallest box containing both operands.
    pub fn hull(&self, other: &Self) -> Result<Self, SetError> {
        check_dim("interval hull", self.dim(), other.dim())?;
        Ok(Self {
            lower: self.lower.zip_map(&other.lower, |a, b| a.min(b)),
            upper: self.upper.zip_map(&other.upper, |a, b| a.max(b)),
        })
    }
}
