use super::{Expr, ExprError, Node};
use crate::setalg::IntervalVector;
use crate::Scalar;

/// Closed real interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalScalar<T: Scalar = f64> {
    pub lower: T,
    pub upper: T,
}

// Inherent rather than `std::ops`: `div` is fallible, the rest follow suit.
#[allow(clippy::should_implement_trait)]
impl<T: Scalar> IntervalScalar<T> {
    /// Panics if `lower > upper`; use [`Self::try_new`] for untrusted input.
    pub fn new(lower: T, upper: T) -> Self {
        Self::try_new(lower, upper).expect("interval bounds must satisfy lower <= upper")
    }

    pub fn try_new(lower: T, upper: T) -> Option<Self> {
        (lower <= upper).then_some(Self { lower, upper })
    }

    pub fn point(v: T) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(T::zero())
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> T {
        (self.lower + self.upper) * T::lit(0.5)
    }

    /// Largest absolute value in the interval.
    pub fn magnitude(&self) -> T {
        self.lower.abs().max(self.upper.abs())
    }

    fn hull4(a: T, b: T, c: T, d: T) -> Self {
        Self {
            lower: a.min(b).min(c.min(d)),
            upper: a.max(b).max(c.max(d)),
        }
    }

    pub fn add(self, o: Self) -> Self {
        Self {
            lower: self.lower + o.lower,
            upper: self.upper + o.upper,
        }
    }

    pub fn sub(self, o: Self) -> Self {
        Self {
            lower: self.lower - o.upper,
            upper: self.upper - o.lower,
        }
    }

    pub fn neg(self) -> Self {
        Self {
            lower: -self.upper,
            upper: -self.lower,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        Self::hull4(
            self.lower * o.lower,
            self.lower * o.upper,
            self.upper * o.lower,
            self.upper * o.upper,
        )
    }

    pub fn scale(self, s: T) -> Self {
        let (a, b) = (self.lower * s, self.upper * s);
        Self {
            lower: a.min(b),
            upper: a.max(b),
        }
    }

    pub fn div(self, o: Self) -> Result<Self, ExprError> {
        if o.contains_zero() {
            return Err(ExprError::Domain(format!(
                "division by interval [{}, {}] containing zero",
                o.lower, o.upper
            )));
        }
        Ok(Self::hull4(
            self.lower / o.lower,
            self.lower / o.upper,
            self.upper / o.lower,
            self.upper / o.upper,
        ))
    }

    pub fn abs(self) -> Self {
        if self.lower >= T::zero() {
            self
        } else if self.upper <= T::zero() {
            self.neg()
        } else {
            Self {
                lower: T::zero(),
                upper: self.magnitude(),
            }
        }
    }

    pub fn sqrt(self) -> Result<Self, ExprError> {
        if self.lower < T::zero() {
            return Err(ExprError::Domain(format!(
                "square root of interval [{}, {}] with negative part",
                self.lower, self.upper
            )));
        }
        Ok(Self {
            lower: self.lower.sqrt(),
            upper: self.upper.sqrt(),
        })
    }

    /// Tight integer power. Repeated multiplication may round differently
    /// at different magnitudes, so the result is widened by a few ulps.
    pub fn powi(self, k: i32) -> Result<Self, ExprError> {
        if k == 0 {
            return Ok(Self::point(T::one()));
        }
        if k < 0 && self.contains_zero() {
            return Err(ExprError::Domain(format!(
                "negative power of interval [{}, {}] containing zero",
                self.lower, self.upper
            )));
        }
        let (a, b) = (self.lower.powi(k), self.upper.powi(k));
        let mut lower = a.min(b);
        let upper = a.max(b);
        if k > 0 && k % 2 == 0 && self.lower < T::zero() && self.upper > T::zero() {
            lower = T::zero();
        }
        if k == 1 {
            return Ok(Self { lower, upper });
        }
        let slack = T::default_epsilon() * T::lit(4.0);
        Ok(Self {
            lower: if lower == T::zero() {
                lower
            } else {
                lower - lower.abs() * slack
            },
            upper: upper + upper.abs() * slack,
        })
    }

    /// Tight square (never negative).
    pub fn square(self) -> Self {
        let (a, b) = (self.lower * self.lower, self.upper * self.upper);
        if self.lower < T::zero() && self.upper > T::zero() {
            Self {
                lower: T::zero(),
                upper: a.max(b),
            }
        } else {
            Self {
                lower: a.min(b),
                upper: a.max(b),
            }
        }
    }

    pub fn sign(self) -> Self {
        if self.lower > T::zero() {
            Self::point(T::one())
        } else if self.upper < T::zero() {
            Self::point(-T::one())
        } else {
            Self {
                lower: if self.lower < T::zero() { -T::one() } else { T::zero() },
                upper: if self.upper > T::zero() { T::one() } else { T::zero() },
            }
        }
    }

    pub fn hull(self, o: Self) -> Self {
        Self {
            lower: self.lower.min(o.lower),
            upper: self.upper.max(o.upper),
        }
    }
}

pub(super) fn enclose<T: Scalar>(n: &Node, b: &[IntervalScalar<T>]) -> Result<IntervalScalar<T>, ExprError> {
    Ok(match n {
        Node::Const(c) => IntervalScalar::point(T::lit(*c)),
        Node::Var(i) => b[*i],
        Node::Add(x, y) => enclose(x, b)?.add(enclose(y, b)?),
        Node::Sub(x, y) => enclose(x, b)?.sub(enclose(y, b)?),
        Node::Mul(x, y) => enclose(x, b)?.mul(enclose(y, b)?),
        Node::Div(x, y) => enclose(x, b)?.div(enclose(y, b)?)?,
        Node::Neg(x) => enclose(x, b)?.neg(),
        Node::Abs(x) => enclose(x, b)?.abs(),
        Node::Sqrt(x) => enclose(x, b)?.sqrt()?,
        Node::Pow(x, k) => enclose(x, b)?.powi(*k)?,
        Node::Norm(args) | Node::SqNorm(args) => {
            let mut s = IntervalScalar::point(T::zero());
            for a in args {
                s = s.add(enclose(a, b)?.square());
            }
            if matches!(n, Node::Norm(_)) {
                s.sqrt()?
            } else {
                s
            }
        }
        Node::Sign(x) => enclose(x, b)?.sign(),
    })
}

pub(super) fn box_intervals<T: Scalar>(bx: &IntervalVector<T>) -> Vec<IntervalScalar<T>> {
    (0..bx.dim())
        .map(|i| IntervalScalar {
            lower: bx.lower()[i],
            upper: bx.upper()[i],
        })
        .collect()
}

impl Expr {
    /// Natural interval extension over `bx`: every operation is replaced by
    /// its interval counterpart. Repeated variables are treated
    /// independently (`x1 * x1` on `[-1, 1]` gives `[-1, 1]`), while `^`,
    /// `sq` and `norm` square tightly.
    pub fn eval_interval<T: Scalar>(&self, bx: &IntervalVector<T>) -> Result<IntervalScalar<T>, ExprError> {
        self.check_point(bx.dim())?;
        enclose(self.node(), &box_intervals(bx))
    }
}
