//! Optimal transport on sparse graphs by a proximal-stabilized interior
//! point method with sparsified normal equations.
//!
//! The transport problem is the min-cost flow LP `min c^T x, A x = b,
//! x >= 0` over the arcs of a graph ([`Problem`]). [`ps_ipm_solve`] runs an
//! outer proximal point loop whose subproblems are solved by an inexact
//! infeasible interior point method; the Newton systems reduce to
//! regularized weighted Laplacians that are sparsified and solved by
//! sparse Cholesky or preconditioned conjugate gradients.

pub mod bench;
pub mod cli;
pub mod error;
pub mod graph;
pub mod io;
pub mod ipm;
pub mod linalg;
pub mod oracle;
pub mod ppm;
pub mod problem;
pub mod report;
pub mod sparsify;

pub use error::{Error, Result};
pub use graph::{weighted_laplacian, EdgeWeights, Graph};
pub use ipm::{Mode, RegParams};
pub use ppm::{ps_ipm_solve, ps_ipm_solve_observed, Solution, SolverOptions};
pub use problem::Problem;
pub use sparsify::{Backend, BackendChoice};
