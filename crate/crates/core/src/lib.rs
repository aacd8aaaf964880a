//! Discrete (p,q)-Laplacian calculus on finite weighted graphs, together with
//! critical-point solvers for the coupled quasilinear system
//!
//! ```text
//! -Δ_p u + h1 |u|^{p-2} u = F_s(x,u,v) + λ1 e1
//! -Δ_q v + h2 |v|^{q-2} v = F_t(x,u,v) + λ2 e2
//! ```
//!
//! Layering, bottom up: [`graph`] and [`calculus`] know nothing about the
//! system; [`problem`] holds the data of one instance and its closed-form
//! constants; [`functional`] evaluates the energy and its derivative;
//! [`solver`] searches for critical points.

pub mod calculus;
pub mod expr;
pub mod functional;
pub mod graph;
pub mod nonlinearity;
pub mod problem;
pub mod report;
pub mod solver;
pub mod vertex_io;

pub use calculus::{Exponent, VertexFunction};
pub use functional::State;
pub use graph::WeightedGraph;
pub use nonlinearity::Nonlinearity;
pub use problem::{HypothesisParams, ProblemSpec};
pub use solver::{SolveOptions, SolveReport};
