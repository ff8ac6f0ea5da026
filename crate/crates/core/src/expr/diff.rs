use super::interval::{box_intervals, enclose, IntervalScalar};
use super::{Expr, ExprError, Node};
use crate::setalg::IntervalVector;
use crate::Scalar;

/// Symbolic partial derivative with respect to variable `j`.
pub(super) fn derivative(n: &Node, j: usize) -> Node {
    match n {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == j { 1.0 } else { 0.0 }),
        Node::Add(a, b) => Node::add(derivative(a, j), derivative(b, j)),
        Node::Sub(a, b) => Node::sub(derivative(a, j), derivative(b, j)),
        Node::Mul(a, b) => Node::add(
            Node::mul(derivative(a, j), (**b).clone()),
            Node::mul((**a).clone(), derivative(b, j)),
        ),
        Node::Div(a, b) => {
            let (da, db) = (derivative(a, j), derivative(b, j));
            Node::sub(
                Node::div(da, (**b).clone()),
                Node::div(Node::mul((**a).clone(), db), Node::pow((**b).clone(), 2)),
            )
        }
        Node::Neg(a) => Node::neg(derivative(a, j)),
        Node::Abs(a) => Node::mul(Node::Sign(a.clone()), derivative(a, j)),
        Node::Sqrt(a) => {
            let da = derivative(a, j);
            if da.is_zero() {
                return da;
            }
            Node::div(da, Node::mul(Node::Const(2.0), n.clone()))
        }
        Node::Pow(a, k) => Node::mul(
            Node::mul(Node::Const(f64::from(*k)), Node::pow((**a).clone(), k - 1)),
            derivative(a, j),
        ),
        Node::SqNorm(args) => args.iter().fold(Node::Const(0.0), |acc, a| {
            Node::add(acc, Node::mul(Node::mul(Node::Const(2.0), a.clone()), derivative(a, j)))
        }),
        Node::Norm(args) => {
            let numerator = args.iter().fold(Node::Const(0.0), |acc, a| {
                Node::add(acc, Node::mul(a.clone(), derivative(a, j)))
            });
            Node::div(numerator, n.clone())
        }
        // Piecewise constant; the kink itself is excluded by `kink_guard`.
        Node::Sign(_) => Node::Const(0.0),
    }
}

/// Rejects boxes on which an `abs`/`sign` argument can reach zero, since the
/// second derivative is unbounded there.
fn kink_guard<T: Scalar>(n: &Node, b: &[IntervalScalar<T>]) -> Result<(), ExprError> {
    match n {
        Node::Const(_) | Node::Var(_) => Ok(()),
        Node::Add(x, y) | Node::Sub(x, y) | Node::Mul(x, y) | Node::Div(x, y) => {
            kink_guard(x, b)?;
            kink_guard(y, b)
        }
        Node::Abs(x) | Node::Sign(x) => {
            kink_guard(x, b)?;
            if x.arity() > 0 {
                let r = enclose(x, b)?;
                if r.contains_zero() {
                    return Err(ExprError::Domain(format!(
                        "abs/sign argument ranges over [{}, {}], which contains its kink",
                        r.lower, r.upper
                    )));
                }
            }
            Ok(())
        }
        Node::Neg(x) | Node::Sqrt(x) | Node::Pow(x, _) => kink_guard(x, b),
        Node::Norm(args) | Node::SqNorm(args) => args.iter().try_for_each(|a| kink_guard(a, b)),
    }
}

impl Expr {
    /// Symbolic partial derivative `∂e/∂x_{j+1}` (0-based `j`).
    pub fn partial(&self, j: usize) -> Expr {
        Expr {
            node: derivative(self.node(), j),
            dim: self.dim(),
        }
    }

    /// Entrywise enclosures of the Hessian over `bx`: symbolic second
    /// derivatives evaluated with the natural interval extension.
    pub fn hessian_interval<T: Scalar>(
        &self,
        bx: &IntervalVector<T>,
    ) -> Result<Vec<Vec<IntervalScalar<T>>>, ExprError> {
        self.check_point(bx.dim())?;
        let n = self.dim();
        let b = box_intervals(bx);
        kink_guard(self.node(), &b)?;
        let zero = IntervalScalar::point(T::zero());
        let mut h = vec![vec![zero; n]; n];
        #[allow(clippy::needless_range_loop)] // fills both triangles
        for i in 0..n {
            let di = derivative(self.node(), i);
            for j in i..n {
                let dij = derivative(&di, j);
                let v = enclose(&dij, &b)?;
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        Ok(h)
    }
}
