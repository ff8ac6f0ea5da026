//! Scalar expressions over state variables `x1..xn`.
//!
//! Expressions are parsed from a small infix language, evaluated at points
//! (with exact forward-mode gradients) and over boxes (natural interval
//! extension, including interval Hessians obtained by symbolic
//! differentiation). Nonlinear predicates `r - |h(x)|` are built on top.

mod diff;
mod eval;
mod interval;
mod parse;
mod print;

use thiserror::Error;

pub use interval::IntervalScalar;
pub use parse::parse_expr;

/// Arguments with magnitude below this are treated as kinks of `abs`, and
/// as singular points of `sqrt`/`norm` derivatives.
pub const KINK_EPSILON: f64 = 1e-12;

/// Expression tree. Variables are 0-based internally and printed 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Abs(Box<Node>),
    Sqrt(Box<Node>),
    /// Integer power.
    Pow(Box<Node>, i32),
    /// Euclidean norm of the arguments, `sqrt(Σ a_i²)`.
    Norm(Vec<Node>),
    /// Squared Euclidean norm, `Σ a_i²`.
    SqNorm(Vec<Node>),
    /// Sign of the argument; appears in derivatives of `abs`.
    Sign(Box<Node>),
}

/// An expression together with the dimension of the state it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    node: Node,
    dim: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable `{name}` at line {line}, column {column} (dimension is {dim})")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
        dim: usize,
    },
    #[error("expression dimension must be positive")]
    ZeroDimension,
    #[error("point has dimension {found}, expression expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    SqrtOfNegative(f64),
    #[error("{function} is not differentiable at argument {value} (kink)")]
    Kink { function: &'static str, value: f64 },
    #[error("interval domain violation: {0}")]
    Domain(String),
}

impl Node {
    /// Largest variable index plus one (0 for variable-free trees).
    pub fn arity(&self) -> usize {
        match self {
            Node::Const(_) => 0,
            Node::Var(i) => i + 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.arity().max(b.arity()),
            Node::Neg(a) | Node::Abs(a) | Node::Sqrt(a) | Node::Pow(a, _) | Node::Sign(a) => a.arity(),
            Node::Norm(args) | Node::SqNorm(args) => args.iter().map(Node::arity).max().unwrap_or(0),
        }
    }

    // Builders that fold trivial constants so derivative trees stay small.

    pub(crate) fn add(a: Node, b: Node) -> Node {
        match (&a, &b) {
            (Node::Const(x), _) if *x == 0.0 => b,
            (_, Node::Const(y)) if *y == 0.0 => a,
            (Node::Const(x), Node::Const(y)) => Node::Const(x + y),
            _ => Node::Add(Box::new(a), Box::new(b)),
        }
    }

    pub(crate) fn sub(a: Node, b: Node) -> Node {
        match (&a, &b) {
            (_, Node::Const(y)) if *y == 0.0 => a,
            (Node::Const(x), _) if *x == 0.0 => Node::neg(b),
            (Node::Const(x), Node::Const(y)) => Node::Const(x - y),
            _ => Node::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub(crate) fn mul(a: Node, b: Node) -> Node {
        match (&a, &b) {
            (Node::Const(x), _) | (_, Node::Const(x)) if *x == 0.0 => Node::Const(0.0),
            (Node::Const(x), _) if *x == 1.0 => b,
            (_, Node::Const(y)) if *y == 1.0 => a,
            (Node::Const(x), Node::Const(y)) => Node::Const(x * y),
            _ => Node::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub(crate) fn div(a: Node, b: Node) -> Node {
        match (&a, &b) {
            (Node::Const(x), _) if *x == 0.0 => Node::Const(0.0),
            (_, Node::Const(y)) if *y == 1.0 => a,
            _ => Node::Div(Box::new(a), Box::new(b)),
        }
    }

    pub(crate) fn neg(a: Node) -> Node {
        match a {
            Node::Const(x) => Node::Const(-x),
            Node::Neg(inner) => *inner,
            other => Node::Neg(Box::new(other)),
        }
    }

    pub(crate) fn pow(a: Node, k: i32) -> Node {
        match (&a, k) {
            (_, 0) => Node::Const(1.0),
            (_, 1) => a,
            (Node::Const(x), _) => Node::Const(x.powi(k)),
            _ => Node::Pow(Box::new(a), k),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, Node::Const(x) if *x == 0.0)
    }
}

impl Expr {
    /// Wraps a tree, checking every variable index against `dim`.
    pub fn new(node: Node, dim: usize) -> Result<Self, ExprError> {
        if dim == 0 {
            return Err(ExprError::ZeroDimension);
        }
        let arity = node.arity();
        if arity > dim {
            return Err(ExprError::UnknownVariable {
                name: format!("x{arity}"),
                line: 0,
                column: 0,
                dim,
            });
        }
        Ok(Self { node, dim })
    }

    pub fn constant(value: f64, dim: usize) -> Result<Self, ExprError> {
        Self::new(Node::Const(value), dim)
    }

    /// `Σ_j row[j] x_j + offset`.
    pub fn affine(row: &[f64], offset: f64) -> Result<Self, ExprError> {
        let mut node = Node::Const(offset);
        for (j, &a) in row.iter().enumerate().rev() {
            node = Node::add(Node::mul(Node::Const(a), Node::Var(j)), node);
        }
        Self::new(node, row.len())
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, found: usize) -> Result<(), ExprError> {
        if found == self.dim {
            Ok(())
        } else {
            Err(ExprError::DimensionMismatch {
                expected: self.dim,
                found,
            })
        }
    }

    /// True when the tree contains no kinked or nonlinear operator, i.e. the
    /// Hessian is identically zero by construction.
    pub fn is_affine(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Const(_) | Node::Var(_) => true,
                Node::Add(a, b) | Node::Sub(a, b) => walk(a) && walk(b),
                Node::Mul(a, b) => (a.arity() == 0 || b.arity() == 0) && walk(a) && walk(b),
                Node::Div(a, b) => b.arity() == 0 && walk(a),
                Node::Neg(a) => walk(a),
                Node::Pow(a, k) => *k == 1 && walk(a) || a.arity() == 0 || *k == 0,
                other => other.arity() == 0,
            }
        }
        walk(&self.node)
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", print::render(&self.node))
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    /// Parses with the dimension inferred from the largest variable used
    /// (at least 1).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse_expr_inferred(s)
    }
}
