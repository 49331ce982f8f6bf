//! Regularity, degree and global invertibility diagnostics for continuous
//! piecewise semi-algebraic maps `f: ℝⁿ → ℝⁿ`.
//!
//! Maps are written in a small DSL (see [`expr::parse_map`]) whose
//! non-smooth locus is tracked syntactically through guard expressions.
//! On top of that the crate estimates the regularity index
//! `ν_f(x) = lim_{r→0} inf { σ(A) : A ∈ co df(B_r(x)) }`, computes the
//! Brouwer degree as a sum of local determinant signs over the fiber,
//! and runs sampled diagnostics for global surjectivity and invertibility.
//!
//! Everything that samples takes an explicit seed; results are identical
//! with and without the `parallel` feature.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod degree;
pub mod error;
pub mod expr;
pub mod global;
pub mod matrix;
pub mod newton;
pub mod par;
pub mod region;
pub mod regularity;
pub mod report;
pub mod sampling;
pub mod selftest;

pub use error::{Error, Result};
pub use expr::{parse_map, Expr, JacobianDef, JacobianEval, MapDef};
pub use matrix::{conorm, hull_conorm_inf, sign_det, HullEstimate, HullSample, Matrix};
pub use newton::NewtonOptions;
pub use region::Region;
pub use regularity::{classify_point, estimate_nu, NuEstimate, NuVerdict, PointClass, Schedule};
pub use degree::{degree_formula, DegreeResult};
pub use global::{GlobalReport, Verdict};
