use nalgebra::{DMatrix, DVector};

use super::ConstrainError;
use crate::expr::{Expr, IntervalScalar};
use crate::setalg::{IntervalVector, Zonotope};
use crate::Scalar;

/// Enclosure `⟨c_L, G_L⟩` of the first-order Taylor remainder of each
/// component of `h` around `x*`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeRemainder<T: Scalar = f64> {
    pub center: DVector<T>,
    pub generators: DMatrix<T>,
}

impl<T: Scalar> LagrangeRemainder<T> {
    pub fn as_zonotope(&self) -> Zonotope<T> {
        Zonotope::new(self.center.clone(), self.generators.clone())
            .expect("remainder parts are consistent")
            .pruned()
    }

    pub fn interval(&self, i: usize) -> IntervalScalar<T> {
        let rad = self.generators.row(i).iter().fold(T::zero(), |a, g| a + g.abs());
        IntervalScalar::new(self.center[i] - rad, self.center[i] + rad)
    }

    pub fn is_zero(&self) -> bool {
        self.center.iter().all(|v| *v == T::zero()) && self.generators.iter().all(|v| *v == T::zero())
    }
}

/// Bounds `R(x) = ½ (x − x*)ᵀ ∇²h(ξ) (x − x*)` for `x, ξ` in `bx`.
///
/// Diagonal terms use the tight square of the deviation, mixed terms the
/// interval product; the result is padded slightly for rounding in the
/// evaluation of `h` itself. Affine components have an exactly zero
/// remainder.
pub fn lagrange_remainder<T: Scalar>(
    h: &[Expr],
    x_star: &DVector<T>,
    bx: &IntervalVector<T>,
) -> Result<LagrangeRemainder<T>, ConstrainError> {
    let p = h.len();
    let n = bx.dim();
    let dev: Vec<IntervalScalar<T>> = (0..n)
        .map(|i| IntervalScalar::new(bx.lower()[i] - x_star[i], bx.upper()[i] - x_star[i]))
        .collect();
    let half = T::lit(0.5);
    let mut center = DVector::zeros(p);
    let mut radius = DVector::zeros(p);
    for (q, e) in h.iter().enumerate() {
        if e.is_affine() {
            continue;
        }
        let hess = e.hessian_interval(bx)?;
        let mut acc = IntervalScalar::point(T::zero());
        for j in 0..n {
            acc = acc.add(hess[j][j].mul(dev[j].square()).scale(half));
            for k in (j + 1)..n {
                acc = acc.add(hess[j][k].mul(dev[j].mul(dev[k])));
            }
        }
        let (value, grad) = e
            .value_and_gradient(x_star.as_slice())
            .unwrap_or((T::zero(), vec![T::zero(); n]));
        let linear_scale = grad
            .iter()
            .zip(&dev)
            .fold(T::zero(), |a, (g, d)| a + g.abs() * d.magnitude());
        let scale = T::one() + value.abs() + linear_scale + acc.magnitude();
        let pad = scale * T::lit(1e-12);
        center[q] = acc.midpoint();
        radius[q] = acc.width() * half + pad;
    }
    Ok(LagrangeRemainder {
        center,
        generators: DMatrix::from_diagonal(&radius),
    })
}
