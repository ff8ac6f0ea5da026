use nalgebra::{DMatrix, DVector};

use super::{check_dim, SetError, Zonotope, MEMBERSHIP_TOLERANCE};
use crate::Scalar;

/// Set of matrices `{ C + Σ β_i G_i : β ∈ [-1, 1]^k }`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixZonotope<T: Scalar = f64> {
    center: DMatrix<T>,
    generators: Vec<DMatrix<T>>,
}

impl<T: Scalar> MatrixZonotope<T> {
    pub fn new(center: DMatrix<T>, generators: Vec<DMatrix<T>>) -> Result<Self, SetError> {
        for g in &generators {
            check_dim("matrix generator rows", center.nrows(), g.nrows())?;
            check_dim("matrix generator columns", center.ncols(), g.ncols())?;
        }
        Ok(Self { center, generators })
    }

    /// Stacks `columns` independent copies of a vector zonotope side by side:
    /// the center repeats `c` in every column and each generator `g` of `z`
    /// yields one matrix generator per column holding `g` there and zeros
    /// elsewhere.
    pub fn from_repeated_columns(z: &Zonotope<T>, columns: usize) -> Self {
        let n = z.dim();
        let mut center = DMatrix::zeros(n, columns);
        for j in 0..columns {
            center.set_column(j, z.center());
        }
        let mut generators = Vec::with_capacity(z.num_generators() * columns);
        for g in z.generators().column_iter() {
            for j in 0..columns {
                let mut m = DMatrix::zeros(n, columns);
                m.set_column(j, &g);
                generators.push(m);
            }
        }
        Self { center, generators }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    pub fn center(&self) -> &DMatrix<T> {
        &self.center
    }

    pub fn generators(&self) -> &[DMatrix<T>] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// Column-major vectorization as an ordinary zonotope in `R^{n m}`.
    pub fn to_zonotope(&self) -> Zonotope<T> {
        let (n, m) = self.shape();
        let center = DVector::from_column_slice(self.center.as_slice());
        let mut g = DMatrix::zeros(n * m, self.generators.len());
        for (k, gm) in self.generators.iter().enumerate() {
            g.set_column(k, &DVector::from_column_slice(gm.as_slice()));
        }
        Zonotope::from_parts(center, g)
    }

    pub fn contains(&self, m: &DMatrix<T>) -> Result<bool, SetError> {
        check_dim("matrix membership rows", self.center.nrows(), m.nrows())?;
        check_dim("matrix membership columns", self.center.ncols(), m.ncols())?;
        self.to_zonotope()
            .contains_point_tol(&DVector::from_column_slice(m.as_slice()), MEMBERSHIP_TOLERANCE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn repeated_columns_shape() {
        let z = Zonotope::new(dvector![1.0, 2.0], dmatrix![0.5, 0.0; 0.0, 0.5]).unwrap();
        let mz = MatrixZonotope::from_repeated_columns(&z, 3);
        assert_eq!(mz.shape(), (2, 3));
        assert_eq!(mz.num_generators(), 6);
        assert!(mz.contains(&dmatrix![1.5, 0.5, 1.0; 2.0, 2.5, 1.5]).unwrap());
        assert!(!mz.contains(&dmatrix![1.6, 1.0, 1.0; 2.0, 2.0, 2.0]).unwrap());
    }
}
