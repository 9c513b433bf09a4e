//! Levenberg-Marquardt with singular scaling (LMMSS) for non-zero-residue
//! nonlinear least squares.
//!
//! The crate is organized in four layers:
//!
//! - [`linalg`]: dense GSVD of a matrix pair, stable regularized direction
//!   solves through the augmented least-squares form, and eigenvalue/rank
//!   utilities.
//! - [`problem`]: the nonlinear least-squares problem abstraction, scaling
//!   matrices, finite-difference Jacobian verification, and the built-in
//!   benchmark problems `ex1`, `ex2`, `ex3` with analytic stationary-set
//!   distance oracles.
//! - [`solver`]: the pure LMMSS iteration (unit step, gradient-norm damping)
//!   and the line-search-globalized variant with full-step acceptance and
//!   classic-LM safeguard fallback.
//! - [`diagnostics`]: empirical probes for the convergence assumptions
//!   (completeness, Lipschitz Jacobian, error bound, gradient linearization),
//!   convergence-rate estimation, and per-run invariant auditing.
//!
//! Grid scans and sampling probes run data-parallel under the default
//! `parallel` feature; disable default features for a sequential build with
//! identical output.

pub mod diagnostics;
pub mod linalg;
pub mod problem;
pub mod solver;

pub use linalg::{Matrix, Vector};
