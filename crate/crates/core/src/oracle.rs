//! Independent brute-force references for small instances.
//!
//! At d = 1 the feasible set is the sign hypercube, so the global maximizer of
//! sum_ij A_ij s_i s_j is computable by exhaustive enumeration (quotienting the
//! global sign); this anchors every claim the certificate makes at d = 1. The
//! module also carries a from-scratch one-sided Jacobi SVD so the alignment
//! distance can be cross-checked against an implementation that shares no code
//! with the manifold module's SVD path.

use nalgebra::DMatrix;

use crate::manifold::StiefelTuple;
use crate::model::SyncProblem;
use crate::{Error, Result};

/// Largest node count accepted by the exhaustive search (2^(n-1) states).
pub const MAX_ENUM_NODES: usize = 20;

/// Result of the exhaustive sign search.
#[derive(Debug, Clone)]
pub struct EnumResult {
    /// Maximizing signs, first entry fixed to +1.
    pub best_signs: Vec<f64>,
    pub best_objective: f64,
    /// Best objective over assignments inequivalent to the maximizer.
    pub second_objective: f64,
    /// Whether the maximum is attained by more than one sign class.
    pub ties: bool,
}

/// Exhausts all 2^(n-1) sign classes of a d = 1 instance and returns the
/// maximizer of sum_ij A_ij s_i s_j (diagonal included, matching the solver's
/// objective).
pub fn brute_force_z2(problem: &SyncProblem) -> Result<EnumResult> {
    if problem.d() != 1 {
        return Err(Error::InvalidInput(format!(
            "brute_force_z2 handles d = 1 only, got d = {}",
            problem.d()
        )));
    }
    let n = problem.n();
    if n > MAX_ENUM_NODES {
        return Err(Error::InvalidInput(format!(
            "brute_force_z2 capped at n <= {MAX_ENUM_NODES}, got n = {n}"
        )));
    }
    let a = problem.data().dense();
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    let mut best_mask = 0u32;
    // Bit b of the mask flips node b+1; node 0 is pinned to +1.
    for mask in 0..(1u32 << (n - 1)) {
        let mut obj = 0.0;
        for i in 0..n {
            let si = sign_of(mask, i);
            for j in 0..n {
                obj += a[(i, j)] * si * sign_of(mask, j);
            }
        }
        if obj > best {
            second = best;
            best = obj;
            best_mask = mask;
        } else if obj > second {
            second = obj;
        }
    }
    let best_signs: Vec<f64> = (0..n).map(|i| sign_of(best_mask, i)).collect();
    let ties = (best - second) <= 1e-9 * (1.0 + best.abs());
    Ok(EnumResult {
        best_signs,
        best_objective: best,
        second_objective: second,
        ties,
    })
}

fn sign_of(mask: u32, node: usize) -> f64 {
    if node == 0 || mask & (1 << (node - 1)) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Alignment distance sqrt(2 (nd - sum_k sigma_k(Z^T S))) with the singular
/// values computed by the local Jacobi sweep, independent of the manifold
/// module's SVD path.
pub fn brute_force_nuclear_distance(s: &StiefelTuple, z: &StiefelTuple) -> Result<f64> {
    if z.p() != z.d() || z.n() != s.n() || z.d() != s.d() {
        return Err(Error::dim(
            "brute_force_nuclear_distance",
            format!("reference n={}, d=p={}", s.n(), s.d()),
            format!("n={}, d={}, p={}", z.n(), z.d(), z.p()),
        ));
    }
    let m = z.stacked().transpose() * s.stacked();
    let nuclear: f64 = jacobi_singular_values(&m).iter().sum();
    let nd = (s.n() * s.d()) as f64;
    Ok((2.0 * (nd - nuclear)).max(0.0).sqrt())
}

/// Singular values by one-sided Jacobi: rotate column pairs of M^T until all
/// pairwise inner products vanish; the singular values are the column norms.
pub fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut work = m.transpose(); // tall: p x d, columns get orthogonalized
    let cols = work.ncols();
    let scale: f64 = work.iter().map(|v| v * v).sum();
    let tol = 1e-28 * (1.0 + scale);
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for r in 0..work.nrows() {
                    a += work[(r, i)] * work[(r, i)];
                    b += work[(r, j)] * work[(r, j)];
                    c += work[(r, i)] * work[(r, j)];
                }
                if c * c <= tol * a.max(1e-300) * b.max(1e-300) {
                    continue;
                }
                let tau = (b - a) / (2.0 * c);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                for r in 0..work.nrows() {
                    let vi = work[(r, i)];
                    let vj = work[(r, j)];
                    work[(r, i)] = cos * vi - sin * vj;
                    work[(r, j)] = sin * vi + cos * vj;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigmas: Vec<f64> = (0..cols).map(|k| work.column(k).norm()).collect();
    sigmas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sigmas
}
