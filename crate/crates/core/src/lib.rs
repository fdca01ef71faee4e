//! Separability of two Euclidean balls under a dithered, uniformly quantised
//! Gaussian embedding: margins from small convex programs, Monte Carlo
//! probability estimates, sample-complexity formulas and the grid experiment.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certificates;
pub mod embedding;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod solvers;

pub(crate) mod vecops;

pub use embedding::{QuantisedMap, SensingMatrix};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{Ball, DifferenceBall};
pub use solvers::{MarginResult, SolverConfig};
