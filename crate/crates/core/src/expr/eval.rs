use super::{Expr, ExprError, Node, KINK_EPSILON};
use crate::Scalar;

fn point<T: Scalar>(n: &Node, x: &[T]) -> Result<T, ExprError> {
    Ok(match n {
        Node::Const(c) => T::lit(*c),
        Node::Var(i) => x[*i],
        Node::Add(a, b) => point(a, x)? + point(b, x)?,
        Node::Sub(a, b) => point(a, x)? - point(b, x)?,
        Node::Mul(a, b) => point(a, x)? * point(b, x)?,
        Node::Div(a, b) => {
            let d = point(b, x)?;
            if d == T::zero() {
                return Err(ExprError::DivisionByZero);
            }
            point(a, x)? / d
        }
        Node::Neg(a) => -point(a, x)?,
        Node::Abs(a) => point(a, x)?.abs(),
        Node::Sqrt(a) => {
            let v = point(a, x)?;
            if v < T::zero() {
                return Err(ExprError::SqrtOfNegative(v.to_f64_lossy()));
            }
            v.sqrt()
        }
        Node::Pow(a, k) => {
            let v = point(a, x)?;
            if *k < 0 && v == T::zero() {
                return Err(ExprError::DivisionByZero);
            }
            v.powi(*k)
        }
        Node::Norm(args) => sum_squares(args, x)?.sqrt(),
        Node::SqNorm(args) => sum_squares(args, x)?,
        Node::Sign(a) => {
            let v = point(a, x)?;
            if v > T::zero() {
                T::one()
            } else if v < T::zero() {
                -T::one()
            } else {
                T::zero()
            }
        }
    })
}

fn sum_squares<T: Scalar>(args: &[Node], x: &[T]) -> Result<T, ExprError> {
    let mut s = T::zero();
    for a in args {
        let v = point(a, x)?;
        s += v * v;
    }
    Ok(s)
}

/// Value together with its gradient.
#[derive(Debug, Clone)]
struct Dual<T> {
    v: T,
    d: Vec<T>,
}

impl<T: Scalar> Dual<T> {
    fn constant(v: T, n: usize) -> Self {
        Self {
            v,
            d: vec![T::zero(); n],
        }
    }

    fn scaled(v: T, d: &[T], s: T) -> Self {
        Self {
            v,
            d: d.iter().map(|di| *di * s).collect(),
        }
    }

    fn combine(v: T, a: &Self, sa: T, b: &Self, sb: T) -> Self {
        Self {
            v,
            d: a.d.iter().zip(&b.d).map(|(p, q)| *p * sa + *q * sb).collect(),
        }
    }
}

fn kink<T: Scalar>(function: &'static str, v: T) -> ExprError {
    ExprError::Kink {
        function,
        value: v.to_f64_lossy(),
    }
}

fn dual<T: Scalar>(n: &Node, x: &[T]) -> Result<Dual<T>, ExprError> {
    let dim = x.len();
    let eps = T::lit(KINK_EPSILON);
    let one = T::one();
    Ok(match n {
        Node::Const(c) => Dual::constant(T::lit(*c), dim),
        Node::Var(i) => {
            let mut d = Dual::constant(x[*i], dim);
            d.d[*i] = one;
            d
        }
        Node::Add(a, b) => {
            let (a, b) = (dual(a, x)?, dual(b, x)?);
            Dual::combine(a.v + b.v, &a, one, &b, one)
        }
        Node::Sub(a, b) => {
            let (a, b) = (dual(a, x)?, dual(b, x)?);
            Dual::combine(a.v - b.v, &a, one, &b, -one)
        }
        Node::Mul(a, b) => {
            let (a, b) = (dual(a, x)?, dual(b, x)?);
            Dual::combine(a.v * b.v, &a, b.v, &b, a.v)
        }
        Node::Div(a, b) => {
            let (a, b) = (dual(a, x)?, dual(b, x)?);
            if b.v == T::zero() {
                return Err(ExprError::DivisionByZero);
            }
            let q = a.v / b.v;
            Dual::combine(q, &a, one / b.v, &b, -q / b.v)
        }
        Node::Neg(a) => {
            let a = dual(a, x)?;
            Dual::scaled(-a.v, &a.d, -one)
        }
        Node::Abs(a) => {
            let a = dual(a, x)?;
            if a.v.abs() < eps {
                return Err(kink("abs", a.v));
            }
            let s = if a.v > T::zero() { one } else { -one };
            Dual::scaled(a.v.abs(), &a.d, s)
        }
        Node::Sqrt(a) => {
            let a = dual(a, x)?;
            if a.v < T::zero() {
                return Err(ExprError::SqrtOfNegative(a.v.to_f64_lossy()));
            }
            if a.v < eps {
                return Err(kink("sqrt", a.v));
            }
            let r = a.v.sqrt();
            Dual::scaled(r, &a.d, one / (r + r))
        }
        Node::Pow(a, k) => {
            let a = dual(a, x)?;
            if *k < 0 && a.v == T::zero() {
                return Err(ExprError::DivisionByZero);
            }
            let kk = T::lit(f64::from(*k));
            let slope = if *k == 0 { T::zero() } else { kk * a.v.powi(*k - 1) };
            Dual::scaled(a.v.powi(*k), &a.d, slope)
        }
        Node::Norm(args) | Node::SqNorm(args) => {
            let mut s = Dual::constant(T::zero(), dim);
            for a in args {
                let a = dual(a, x)?;
                s = Dual::combine(s.v + a.v * a.v, &s, one, &a, a.v + a.v);
            }
            if matches!(n, Node::SqNorm(_)) {
                s
            } else {
                let r = s.v.sqrt();
                if r < eps {
                    return Err(kink("norm", r));
                }
                Dual::scaled(r, &s.d, one / (r + r))
            }
        }
        Node::Sign(a) => {
            let a = dual(a, x)?;
            if a.v.abs() < eps {
                return Err(kink("sign", a.v));
            }
            let s = if a.v > T::zero() { one } else { -one };
            Dual::constant(s, dim)
        }
    })
}

impl Expr {
    /// Point evaluation.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<T, ExprError> {
        self.check_point(x.len())?;
        point(self.node(), x)
    }

    /// Exact gradient by forward-mode differentiation.
    ///
    /// Fails with [`ExprError::Kink`] when an `abs`, `sign`, `sqrt` or `norm`
    /// argument is within [`super::KINK_EPSILON`] of its singular point.
    pub fn gradient<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>, ExprError> {
        self.check_point(x.len())?;
        Ok(dual(self.node(), x)?.d)
    }

    /// Value and gradient in one pass.
    pub fn value_and_gradient<T: Scalar>(&self, x: &[T]) -> Result<(T, Vec<T>), ExprError> {
        self.check_point(x.len())?;
        let d = dual(self.node(), x)?;
        Ok((d.v, d.d))
    }
}
