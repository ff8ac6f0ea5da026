//! Data-driven reachability for unknown discrete-time systems, tightened by
//! signal temporal logic side information.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below pick a concrete type.

// `!(x >= 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constrain;
pub mod expr;
mod lp;
pub mod parallel;
pub mod reach;
mod scalar;
pub mod scenarios;
pub mod setalg;
pub mod stl;

pub use scalar::Scalar;

pub type Zonotope64 = setalg::Zonotope<f64>;
pub type Zonotope32 = setalg::Zonotope<f32>;
pub type ConstrainedZonotope64 = setalg::ConstrainedZonotope<f64>;
pub type ConstrainedZonotope32 = setalg::ConstrainedZonotope<f32>;
pub type MatrixZonotope64 = setalg::MatrixZonotope<f64>;
pub type MatrixZonotope32 = setalg::MatrixZonotope<f32>;
pub type IntervalVector64 = setalg::IntervalVector<f64>;
pub type IntervalVector32 = setalg::IntervalVector<f32>;
