//! Accelerated linearized ADMM with Nesterov extrapolation for
//! `min f₁(x) + f₂(x) + g₁(y) + g₂(y)` subject to `Ax + By = b`.

// `!(a <= b)` is used on purpose so that NaN counts as a failed check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod problems;
pub mod scalar;
pub mod schedule;
pub mod subprob;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use scalar::Scalar;

pub type Vec64 = Vector<f64>;
pub type Mat64 = Matrix<f64>;
pub type Vec32 = Vector<f32>;
pub type Mat32 = Matrix<f32>;
pub type Instance64 = model::ProblemInstance<f64>;
pub type Instance32 = model::ProblemInstance<f32>;
pub type Config64 = engine::SolverConfig<f64>;
pub type Config32 = engine::SolverConfig<f32>;
pub type Report64 = engine::RunReport<f64>;
