//! Constructive fixed-point machinery for non-expansive maps on bounded
//! closed convex sets of a Hilbert space, realized in finite dimension.
//!
//! * [`space`]: Euclidean `R^n` and quadrature-discretized `L^2[a, b]`.
//! * [`convex`]: balls, boxes, simplices and their intersections.
//! * [`operators`]: maps `A`, the residual `L = I - A`, sampling certifiers.
//! * [`fixpoint`]: Picard and Krasnoselskii-Mann iterations.
//! * [`vi`]: extragradient solver and Minty residuals.
//! * [`kkm`]: exhaustive KKM covering and intersection checks.
//! * [`fredholm`]: second-kind Fredholm equations via Nystrom discretization.
//! * [`cli`]: config-driven front end used by the `nonexpansive` binary.

pub mod acceptance;
pub mod cli;
pub mod convex;
pub mod error;
pub mod expr;
pub mod fixpoint;
pub mod fredholm;
pub mod kkm;
pub mod operators;
pub mod space;
pub mod vi;

pub use convex::ConvexSet;
pub use error::{Error, Result};
pub use fixpoint::{ConvergenceReport, IterationConfig, Status};
pub use operators::{OperatorSpec, ResidualOperator};
pub use space::{Element, QuadratureGrid, Rule, Space};
