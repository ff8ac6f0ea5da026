use nalgebra::DMatrix;

use crate::Scalar;

/// Gain `λ` used by zonotope intersections.
#[derive(Debug, Clone, PartialEq)]
pub enum Gain<T: Scalar = f64> {
    /// Minimizes the Frobenius norm of the resulting generator matrix.
    Auto,
    /// A fixed `n × p` matrix; any value gives a valid enclosure.
    Fixed(DMatrix<T>),
}

/// Minimizer of `‖[(I − λJ)G, λR, −λG_L]‖_F`:
/// `λ = G Gᵀ Jᵀ (J G Gᵀ Jᵀ + R Rᵀ + G_L G_Lᵀ)⁻¹`.
///
/// Falls back to `λ = 0` when the normal equations are singular or the
/// solution is not finite.
pub fn optimal_gain<T: Scalar>(g: &DMatrix<T>, j: &DMatrix<T>, r_diag: &[T], gl: Option<&DMatrix<T>>) -> DMatrix<T> {
    let n = g.nrows();
    let p = j.nrows();
    let ggt = g * g.transpose();
    let mut s = j * &ggt * j.transpose();
    for (i, r) in r_diag.iter().enumerate() {
        s[(i, i)] += *r * *r;
    }
    if let Some(gl) = gl {
        s += gl * gl.transpose();
    }
    let rhs = ggt * j.transpose();
    match s.clone().try_inverse() {
        Some(inv) => {
            let lambda = rhs * inv;
            if lambda.iter().all(|v| v.is_finite_value()) {
                lambda
            } else {
                DMatrix::zeros(n, p)
            }
        }
        None => DMatrix::zeros(n, p),
    }
}
