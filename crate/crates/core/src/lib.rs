//! Lower and upper bounds on the interventional expectation E[Y | do(x*)]
//! in continuous instrumental-variable models.
//!
//! The pipeline: whiten observational (z, x, y) triples, discretize the
//! instrument into a quantile grid, estimate and smooth per-bin moment
//! targets, then optimize a copula-parameterized distribution over
//! response-function coefficients with an augmented Lagrangian so that the
//! model reproduces those targets while pushing the mean response at x* as
//! low (or high) as possible. Feasible optima are bound estimates; an
//! infeasible solve means the chosen response family cannot explain the
//! data at the requested tolerance.

pub mod baselines;
pub mod check;
pub mod copula;
pub mod data;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod joint;
mod linalg;
pub mod preprocess;
pub mod response;
pub mod rng;
pub mod solver;
mod spline;

pub use data::{load_csv, ColumnSpec, Dataset};
pub use error::{Error, Result};
pub use estimator::Sense;
pub use response::{polynomial_basis, BasisKind, ResponseBasis};
pub use solver::{BoundResult, SolverConfig};
