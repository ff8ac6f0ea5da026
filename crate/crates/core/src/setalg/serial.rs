use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ConstrainedZonotope, SetError, Zonotope};
use crate::Scalar;

/// JSON form of a (constrained) zonotope. Matrices are row-major lists of
/// rows; `A`/`b` are absent for plain zonotopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetJson {
    pub center: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

fn rows_of<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
        .collect()
}

fn matrix_from_rows<T: Scalar>(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> Result<DMatrix<T>, SetError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(SetError::InvalidArgument(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| T::lit(rows[i][j])))
}

impl SetJson {
    pub fn from_zonotope<T: Scalar>(z: &Zonotope<T>) -> Self {
        Self {
            center: z.center().iter().map(|v| v.to_f64_lossy()).collect(),
            generators: rows_of(z.generators()),
            a: None,
            b: None,
        }
    }

    pub fn from_constrained<T: Scalar>(z: &ConstrainedZonotope<T>) -> Self {
        Self {
            center: z.center().iter().map(|v| v.to_f64_lossy()).collect(),
            generators: rows_of(z.generators()),
            a: Some(rows_of(z.constraint_matrix())),
            b: Some(z.constraint_vector().iter().map(|v| v.to_f64_lossy()).collect()),
        }
    }

    fn parts<T: Scalar>(&self) -> Result<(DVector<T>, DMatrix<T>), SetError> {
        let n = self.center.len();
        let ng = self.generators.first().map_or(0, Vec::len);
        let center = DVector::from_iterator(n, self.center.iter().map(|v| T::lit(*v)));
        Ok((center, matrix_from_rows(&self.generators, n, ng, "generators")?))
    }

    /// Plain zonotope; fails if constraints are present.
    pub fn to_zonotope<T: Scalar>(&self) -> Result<Zonotope<T>, SetError> {
        if self.a.as_ref().is_some_and(|a| !a.is_empty()) {
            return Err(SetError::InvalidArgument(
                "set has constraints; read it as a constrained zonotope".into(),
            ));
        }
        let (c, g) = self.parts()?;
        Zonotope::new(c, g)
    }

    pub fn to_constrained<T: Scalar>(&self) -> Result<ConstrainedZonotope<T>, SetError> {
        let (c, g) = self.parts()?;
        let ng = g.ncols();
        let rows = self.a.clone().unwrap_or_default();
        let b = self.b.clone().unwrap_or_default();
        let a = matrix_from_rows(&rows, b.len(), ng, "A")?;
        ConstrainedZonotope::new(c, g, a, DVector::from_iterator(b.len(), b.iter().map(|v| T::lit(*v))))
    }
}
