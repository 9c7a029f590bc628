//! Orthogonal group synchronization: recover n orthogonal matrices from noisy
//! pairwise products A_ij ≈ G_i G_j^T.
//!
//! The crate solves the problem through the generalized projected power method
//! on products of Stiefel manifolds, in two regimes:
//!
//! * the candidate regime (`p = d`, ground-truth initialization), whose fixed
//!   points are checked against the semidefinite relaxation via an explicit
//!   dual certificate;
//! * the low-rank factorized regime (`p > d`, random initialization), where the
//!   same certificate decides whether the computed point is the unique rank-d
//!   global optimum.
//!
//! Modules:
//! * [`manifold`] — Stiefel tuples, polar projection, tangent calculus, and the
//!   alignment distance to the fully synchronized state.
//! * [`blockmat`] — block-structured symmetric matrices and spectral primitives
//!   (partial trace, operator norm, low eigenvalues, Hadamard products).
//! * [`model`] — synchronization instances: ground truth, noise, canonical form.
//! * [`solver`] — the projected power iteration with certification-aware stopping.
//! * [`certify`] — dual certificates, optimality verdicts, deterministic bound
//!   evaluators.
//! * [`landscape`] — Riemannian gradient/Hessian diagnostics and second-order
//!   point audits.
//! * [`oracle`] — brute-force ground truth for small instances (test anchor).
//! * [`io`] — CSV/JSON serialization of matrices, tuples, and problems.

pub mod blockmat;
pub mod certify;
mod error;
pub mod io;
mod lanczos;
pub mod landscape;
pub mod manifold;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod solver;

pub use blockmat::{BlockDiagonal, BlockMatrix};
pub use certify::{BoundReport, Certificate, Tolerances, Verdict};
pub use error::Error;
pub use manifold::{StiefelTuple, TangentTuple};
pub use model::{NoiseKind, SyncProblem};
pub use solver::{Init, SolveTrace, SolverConfig, Termination};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
