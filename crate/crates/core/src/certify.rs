//! Dual-certificate construction and the global-optimality verdict.
//!
//! A first-order critical point S of the factorized objective satisfies
//! (Lambda - A) S = 0 for the block-diagonal multiplier
//! Lambda_ii = (S_i T_i^T + T_i S_i^T)/2 with T_i = sum_j A_ij S_j. The
//! certificate matrix C = Lambda - A decides everything:
//!
//! * C S ~ 0 and C positive semidefinite  =>  S S^T solves the semidefinite
//!   relaxation;
//! * additionally lambda_{d+1}(C) > 0 (rank C = (n-1)d)  =>  that solution is
//!   unique and exactly rank d, i.e. S solves the original orthogonal problem.
//!
//! Numerically the verdict is `CertifiedUniqueRankD` iff
//! ||C S||_op < residual_tol and lambda_{d+1}(C) > gap_tol.
//!
//! The module also evaluates the deterministic sufficient conditions under
//! which this certificate is guaranteed to exist: one for the convex
//! relaxation (delta = 4) and one for the low-rank landscape
//! (delta = (2+sqrt(5))(p+d)gamma/(p-2d), p >= 2d+1).

use nalgebra::DMatrix;

use crate::blockmat::{operator_norm_dense, BlockDiagonal, BlockMatrix};
use crate::manifold::{distance_to_sync, StiefelTuple};
use crate::model::SyncProblem;
use crate::{Error, Result};

/// Stopping/verdict tolerances; defaults follow the iteration's stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub residual_tol: f64,
    pub gap_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_tol: 1e-6,
            gap_tol: 1e-8,
        }
    }
}

/// Outcome of a certification attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Residual and eigen-gap both pass: S S^T is the unique optimum of the
    /// relaxation and S solves the original problem, with rank exactly d.
    CertifiedUniqueRankD,
    /// The point is numerically first-order critical but the gap condition
    /// failed; no optimality claim.
    FirstOrderOnly,
    /// Not even first-order critical at the requested tolerance.
    Failed,
}

/// Dual certificate evaluated at a candidate point.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub lambda: BlockDiagonal,
    /// ||(Lambda - A) S||_op.
    pub residual: f64,
    /// The d+1 smallest eigenvalues of C = Lambda - A, ascending.
    pub low_spectrum: Vec<f64>,
    pub verdict: Verdict,
    pub tolerances: Tolerances,
}

impl Certificate {
    /// lambda_{d+1}(C): the eigen-gap certifying rank tightness.
    pub fn gap(&self) -> f64 {
        *self.low_spectrum.last().expect("spectrum has d+1 entries")
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::CertifiedUniqueRankD
    }
}

/// Multiplier blocks from the precomputed product T = A S.
pub(crate) fn lambda_from_product(s: &StiefelTuple, t_mat: &DMatrix<f64>) -> BlockDiagonal {
    let (n, d) = (s.n(), s.d());
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let si = s.stacked().rows(i * d, d);
        let ti = t_mat.rows(i * d, d);
        let cross = si * ti.transpose();
        blocks.push((&cross + cross.transpose()).scale(0.5));
    }
    BlockDiagonal::from_blocks(n, d, blocks).expect("blocks symmetric by construction")
}

/// Residual ||(Lambda - A) S||_op from the same precomputed product.
pub(crate) fn residual_from_product(
    lambda: &BlockDiagonal,
    s: &StiefelTuple,
    t_mat: &DMatrix<f64>,
) -> f64 {
    let diff = lambda.mul_stacked(s.stacked()) - t_mat;
    operator_norm_dense(&diff).expect("finite by construction")
}

/// First-order multiplier Lambda_ii = (1/2) sum_j (S_i S_j^T A_ji + A_ij S_j S_i^T),
/// symmetrized blockwise.
pub fn compute_lambda(problem: &SyncProblem, s: &StiefelTuple) -> Result<BlockDiagonal> {
    check_dims("compute_lambda", problem, s)?;
    let t_mat = problem.data().mul_stacked(s.stacked());
    Ok(lambda_from_product(s, &t_mat))
}

/// Full certification: builds C = Lambda - A, evaluates the residual and the
/// d+1 smallest eigenvalues, and issues the verdict.
pub fn certify(
    problem: &SyncProblem,
    s: &StiefelTuple,
    tolerances: Tolerances,
) -> Result<Certificate> {
    check_dims("certify", problem, s)?;
    let t_mat = problem.data().mul_stacked(s.stacked());
    let lambda = lambda_from_product(s, &t_mat);
    let residual = residual_from_product(&lambda, s, &t_mat);
    let c = lambda.to_block_matrix().sub(problem.data())?;
    let low_spectrum = c.eigen_low(problem.d() + 1)?;
    let gap = low_spectrum[problem.d()];
    let verdict = if residual < tolerances.residual_tol {
        if gap > tolerances.gap_tol {
            Verdict::CertifiedUniqueRankD
        } else {
            Verdict::FirstOrderOnly
        }
    } else {
        Verdict::Failed
    };
    Ok(Certificate {
        lambda,
        residual,
        low_spectrum,
        verdict,
        tolerances,
    })
}

/// One evaluated sufficient condition of the form
/// n >= 3 delta^2 d ||D||^2/(2n) + delta sqrt(d/n) ||D|| max_i ||D_i||
///      + max_i ||D_i^T G|| + ||D||.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    /// 3 delta^2 d ||D||_op^2 / (2n).
    pub curvature_term: f64,
    /// delta sqrt(d/n) ||D||_op max_i ||D_i||_op.
    pub cross_term: f64,
    /// max_i ||sum_j D_ij G_j||_op.
    pub row_signal_term: f64,
    /// ||D||_op.
    pub noise_norm: f64,
    /// Proximity constant used (4 for the convex bound, the (p, d,
    /// gamma)-dependent value for the low-rank bound).
    pub delta: f64,
    /// Noise-anisotropy factor ||Tr_d(D)||_op / ||D||_op v 1; only set by the
    /// low-rank bound.
    pub gamma: Option<f64>,
    pub satisfied: bool,
    /// n minus the right-hand side.
    pub margin: f64,
}

impl BoundReport {
    pub fn rhs(&self) -> f64 {
        self.curvature_term + self.cross_term + self.row_signal_term + self.noise_norm
    }
}

/// Tightness condition for the convex relaxation (proximity constant 4).
pub fn bound_cvx(delta: &BlockMatrix, g: &StiefelTuple) -> Result<BoundReport> {
    evaluate_bound(delta, g, 4.0, None)
}

/// Benign-landscape condition for the rank-p factorization; needs p >= 2d+1.
pub fn bound_bm(delta: &BlockMatrix, g: &StiefelTuple, p: usize) -> Result<BoundReport> {
    let d = delta.d();
    if p <= 2 * d {
        return Err(Error::BoundNotApplicable { p, two_d: 2 * d });
    }
    let noise_norm = delta.operator_norm();
    let gamma = if noise_norm == 0.0 {
        1.0
    } else {
        (operator_norm_dense(&delta.partial_trace())? / noise_norm).max(1.0)
    };
    let delta_const = (2.0 + 5.0f64.sqrt()) * ((p + d) as f64) * gamma / ((p - 2 * d) as f64);
    evaluate_bound(delta, g, delta_const, Some(gamma))
}

fn evaluate_bound(
    delta: &BlockMatrix,
    g: &StiefelTuple,
    delta_const: f64,
    gamma: Option<f64>,
) -> Result<BoundReport> {
    let (n, d) = (delta.n(), delta.d());
    if g.n() != n || g.d() != d || g.p() != d {
        return Err(Error::dim(
            "bound evaluation",
            format!("ground truth n={n}, d=p={d}"),
            format!("n={}, d={}, p={}", g.n(), g.d(), g.p()),
        ));
    }
    for i in 0..n {
        if delta.block(i, i).norm() > 0.0 {
            return Err(Error::InvalidInput(format!(
                "noise must have zero diagonal blocks; block {i} is nonzero"
            )));
        }
    }
    let noise_norm = delta.operator_norm();
    let mut max_row = 0.0f64;
    let mut max_row_signal = 0.0f64;
    for i in 0..n {
        let row = delta.block_row(i);
        max_row = max_row.max(operator_norm_dense(&row)?);
        let row_g = &row * g.stacked();
        max_row_signal = max_row_signal.max(operator_norm_dense(&row_g)?);
    }
    let nf = n as f64;
    let df = d as f64;
    let curvature_term =
        3.0 * delta_const * delta_const * df * noise_norm * noise_norm / (2.0 * nf);
    let cross_term = delta_const * (df / nf).sqrt() * noise_norm * max_row;
    let rhs = curvature_term + cross_term + max_row_signal + noise_norm;
    Ok(BoundReport {
        n,
        curvature_term,
        cross_term,
        row_signal_term: max_row_signal,
        noise_norm,
        delta: delta_const,
        gamma,
        satisfied: nf >= rhs,
        margin: nf - rhs,
    })
}

/// Proximity condition d_F(S, Z) <= delta sqrt(d/n) ||D||_op.
pub fn proximity_check(
    s: &StiefelTuple,
    z: &StiefelTuple,
    delta: &BlockMatrix,
    delta_const: f64,
) -> Result<bool> {
    let df = distance_to_sync(s, z)?;
    let n = s.n() as f64;
    let d = s.d() as f64;
    Ok(df <= delta_const * (d / n).sqrt() * delta.operator_norm())
}

fn check_dims(context: &'static str, problem: &SyncProblem, s: &StiefelTuple) -> Result<()> {
    if s.n() != problem.n() || s.d() != problem.d() {
        return Err(Error::dim(
            context,
            format!("n={}, d={}", problem.n(), problem.d()),
            format!("n={}, d={}", s.n(), s.d()),
        ));
    }
    Ok(())
}
