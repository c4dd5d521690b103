//! Manifold proximal gradient solvers for nonsmooth objectives over
//! (generalized) Stiefel manifolds, instantiated for sparse PCA and sparse
//! canonical correlation analysis.
//!
//! The pieces, bottom-up:
//!
//! * [`manifold`] — points, tangent projections, and retractions for
//!   Euclidean, Stiefel, and generalized Stiefel manifolds;
//! * [`penalty`] — nonsmooth convex penalties with closed-form proximal
//!   mappings and generalized-Jacobian application;
//! * [`ssn`] — the tangent proximal subproblem, solved by a regularized
//!   semi-smooth Newton method on its dual residual;
//! * [`solver`] — the alternating (Gauss-Seidel or Jacobi) proximal
//!   gradient outer loop with Armijo backtracking and iteration traces;
//! * [`problems`] — sparse PCA and sparse CCA instances and initializers;
//! * [`baselines`] — AMA, PALM, and VP reference methods for sparse PCA,
//!   plus a FISTA inner solver;
//! * [`experiments`] — synthetic data generators and evaluation metrics;
//! * [`bench`] — the benchmark harness behind the `manpg-bench` binary.
//!
//! See the crate examples for end-to-end usage, starting with
//! `custom_problem.rs` for the solver API on a user-defined objective.

extern crate blas_src;

pub mod baselines;
pub mod bench;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod manifold;
pub mod penalty;
pub mod problems;
pub mod solver;
pub mod ssn;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use manifold::{Manifold, Retraction};
pub use penalty::Penalty;
pub use problems::{SccaConfig, SpcaConfig};
pub use solver::{amanpg, stationarity, Mode, Problem, SolverOptions, SolverTrace, Status};
pub use ssn::{SubproblemInput, SubproblemResult};
