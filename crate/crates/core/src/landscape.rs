//! Riemannian first/second-order diagnostics of the factorized objective.
//!
//! The gradient at S projects the data-weighted sums onto the tangent spaces;
//! the Hessian quadratic form along a tangent tuple Sdot is
//!
//! ```text
//! q(Sdot) = - sum_i <Lambda_ii, Sdot_i Sdot_i^T> + sum_ij <A_ij, Sdot_i Sdot_j^T>
//! ```
//!
//! which equals half the second derivative of f along the polar retraction.
//! Second-order criticality is tested by sampling tangent directions (exact
//! verification would need the assembled Hessian operator): a numerical SOCP
//! has vanishing gradient, no sampled direction of positive curvature, and
//! every multiplier block bounded below by the identity.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::certify::compute_lambda;
use crate::manifold::{distance_to_sync, tangent_project, StiefelTuple, TangentTuple};
use crate::model::SyncProblem;
use crate::rng::stream_rng;
use crate::solver::check_fixed_point;
use crate::{Error, Result};

/// Tangency defect above which a direction is rejected by the quadratic form.
const TANGENCY_INPUT_TOL: f64 = 1e-8;

/// Gradient norm below which a sampled point may count as second-order
/// critical.
const SOCP_GRAD_TOL: f64 = 1e-5;

/// Positive-curvature slack: no sampled direction may exceed this.
const SOCP_CURVATURE_TOL: f64 = 1e-8;

/// Slack on the multiplier floor lambda_min(Lambda_ii) >= 1.
const SOCP_MULTIPLIER_TOL: f64 = 1e-6;

/// Residual bound under which a point counts as a converged critical point
/// for the audit.
const AUDIT_RESIDUAL_TOL: f64 = 1e-8;

/// Sampled second-order-criticality report.
#[derive(Debug, Clone)]
pub struct SocpReport {
    /// Frobenius norm of the Riemannian gradient tuple.
    pub grad_norm: f64,
    /// Smallest sampled Hessian quadratic form.
    pub min_quadform: f64,
    /// Largest sampled Hessian quadratic form (the deciding statistic).
    pub max_quadform: f64,
    pub num_directions: usize,
    /// lambda_min(Lambda_ii) per block.
    pub lambda_min_blocks: Vec<f64>,
    pub is_socp_numerically: bool,
}

/// Margins of the two critical-point inequalities and the proximity bound the
/// factorized landscape guarantees.
#[derive(Debug, Clone)]
pub struct BmAuditReport {
    /// Margin (lhs - rhs) of the second-order alignment inequality
    /// (p-d)||Z^T S||_F^2 >= (p-2d) n^2 d + d ||S S^T||_F^2
    ///   + sum_ij (||S_i S_j^T||_F^2 - d) tr(D_ij) + (p-d) <D, Z Z^T - S S^T>.
    pub second_order_margin: f64,
    /// Margin of the first-order Gram inequality
    /// ||S S^T||_F^2 >= ||Z^T S||_F^2 - ||D S||_F^2 / n.
    pub first_order_margin: f64,
    /// Distance d_F(S, Z) to the synchronized state.
    pub distance: f64,
    /// Proximity radius delta sqrt(d/n) ||D||_op with the landscape constant
    /// delta = (2+sqrt(5))(p+d) gamma / (p-2d); None when p <= 2d.
    pub proximity_bound: Option<f64>,
    pub gamma: f64,
    pub proximity_ok: Option<bool>,
}

/// Riemannian gradient: block i is the tangent projection of sum_j A_ij S_j.
/// Vanishes exactly at first-order critical points.
pub fn riemannian_gradient(problem: &SyncProblem, s: &StiefelTuple) -> Result<TangentTuple> {
    check_dims("riemannian_gradient", problem, s)?;
    let (n, d, p) = (s.n(), s.d(), s.p());
    let t_mat = problem.data().mul_stacked(s.stacked());
    let mut stacked = DMatrix::zeros(n * d, p);
    for i in 0..n {
        let si = s.block(i);
        let ti = t_mat.rows(i * d, d).into_owned();
        stacked
            .rows_mut(i * d, d)
            .copy_from(&tangent_project(&si, &ti)?);
    }
    TangentTuple::from_stacked(n, d, p, stacked)
}

/// Hessian quadratic form along a tangent tuple. Rejects directions whose
/// tangency defect exceeds 1e-8.
pub fn hessian_quadform(
    problem: &SyncProblem,
    s: &StiefelTuple,
    sdot: &TangentTuple,
) -> Result<f64> {
    check_dims("hessian_quadform", problem, s)?;
    if (sdot.n(), sdot.d(), sdot.p()) != (s.n(), s.d(), s.p()) {
        return Err(Error::dim(
            "hessian_quadform",
            format!("n={}, d={}, p={}", s.n(), s.d(), s.p()),
            format!("n={}, d={}, p={}", sdot.n(), sdot.d(), sdot.p()),
        ));
    }
    let defect = sdot.tangency_defect(s);
    if defect > TANGENCY_INPUT_TOL {
        return Err(Error::InvalidInput(format!(
            "direction is not tangent: defect {defect:.3e} exceeds {TANGENCY_INPUT_TOL:.0e}"
        )));
    }
    let lambda = compute_lambda(problem, s)?;
    let d = s.d();
    let mut multiplier_part = 0.0;
    for i in 0..s.n() {
        let yi = sdot.stacked().rows(i * d, d);
        let outer = yi * yi.transpose();
        multiplier_part += lambda.block(i).dot(&outer);
    }
    let coupling = problem
        .data()
        .mul_stacked(sdot.stacked())
        .dot(sdot.stacked());
    Ok(coupling - multiplier_part)
}

/// Samples tangent directions at S and reports the observed curvature range,
/// the gradient norm, and the per-block multiplier floors.
///
/// Half of the directions are generic (Gaussian, tangent-projected); the other
/// half take the normal-complement form Phi (I_p - S_i^T S_i), the family the
/// second-order analysis tests. Directions are normalized to unit Frobenius
/// norm.
pub fn sample_socp_test(
    problem: &SyncProblem,
    s: &StiefelTuple,
    num_directions: usize,
    seed: u64,
) -> Result<SocpReport> {
    check_dims("sample_socp_test", problem, s)?;
    if num_directions == 0 {
        return Err(Error::InvalidInput("num_directions must be >= 1".into()));
    }
    let grad_norm = riemannian_gradient(problem, s)?.norm();
    let lambda = compute_lambda(problem, s)?;
    let lambda_min_blocks = lambda.lambda_min_per_block();

    // dim St(d,p) = dp - d(d+1)/2; at p = d = 1 every tangent tuple is zero
    // and the curvature condition is vacuous.
    let tangent_dim = s.d() * s.p() - s.d() * (s.d() + 1) / 2;
    let mut rng = stream_rng(&[seed, s.n() as u64, s.p() as u64, 0x736f_6370]);
    let mut min_qf = 0.0f64;
    let mut max_qf = 0.0f64;
    let mut sampled = 0usize;
    let mut attempt = 0usize;
    while tangent_dim > 0 && sampled < num_directions && attempt < 4 * num_directions {
        let complement_family = sampled % 2 == 1 && s.p() > s.d();
        let sdot = random_tangent(s, &mut rng, complement_family);
        attempt += 1;
        let norm = sdot.norm();
        if norm < 1e-12 {
            continue;
        }
        let unit =
            TangentTuple::from_stacked(sdot.n(), sdot.d(), sdot.p(), sdot.stacked().unscale(norm))?;
        let qf = hessian_quadform(problem, s, &unit)?;
        if sampled == 0 {
            min_qf = qf;
            max_qf = qf;
        } else {
            min_qf = min_qf.min(qf);
            max_qf = max_qf.max(qf);
        }
        sampled += 1;
    }
    if tangent_dim > 0 && sampled == 0 {
        return Err(Error::InvalidInput(
            "tangent sampling degenerated to zero directions".into(),
        ));
    }

    let multipliers_ok = lambda_min_blocks
        .iter()
        .all(|l| *l >= 1.0 - SOCP_MULTIPLIER_TOL);
    let is_socp_numerically =
        grad_norm < SOCP_GRAD_TOL && max_qf <= SOCP_CURVATURE_TOL && multipliers_ok;
    Ok(SocpReport {
        grad_norm,
        min_quadform: min_qf,
        max_quadform: max_qf,
        num_directions: sampled,
        lambda_min_blocks,
        is_socp_numerically,
    })
}

/// Random tangent tuple at S; either a tangent-projected Gaussian or the
/// normal-complement family Phi_i (I_p - S_i^T S_i).
pub fn random_tangent(
    s: &StiefelTuple,
    rng: &mut rand_pcg::Pcg64Mcg,
    complement_family: bool,
) -> TangentTuple {
    let (n, d, p) = (s.n(), s.d(), s.p());
    let mut stacked = DMatrix::zeros(n * d, p);
    for i in 0..n {
        let si = s.block(i);
        let phi = DMatrix::from_fn(d, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let block = if complement_family {
            let proj = DMatrix::<f64>::identity(p, p) - si.transpose() * &si;
            phi * proj
        } else {
            tangent_project(&si, &phi).expect("shapes match")
        };
        stacked.rows_mut(i * d, d).copy_from(&block);
    }
    TangentTuple::from_stacked(n, d, p, stacked).expect("shapes match")
}

/// Evaluates both critical-point inequalities and the landscape proximity
/// bound at a converged critical point (residual below 1e-8 required).
pub fn bm_inequality_audit(problem: &SyncProblem, s: &StiefelTuple) -> Result<BmAuditReport> {
    check_dims("bm_inequality_audit", problem, s)?;
    let residual = check_fixed_point(problem, s)?;
    if residual >= AUDIT_RESIDUAL_TOL {
        return Err(Error::NotCritical {
            residual,
            tol: AUDIT_RESIDUAL_TOL,
        });
    }
    let g = problem
        .ground_truth()
        .ok_or_else(|| Error::InvalidInput("bm_inequality_audit needs a ground truth".into()))?;
    let delta = problem.delta().expect("ground truth present");
    let (n, d, p) = (s.n() as f64, s.d() as f64, s.p() as f64);
    let db = s.d();

    let gram = s.gram_dense();
    let g_gram = g.gram_dense();
    let zs = g.stacked().transpose() * s.stacked();
    let zs_sq = zs.norm_squared();
    let gram_sq = gram.norm_squared();
    let pt = delta.partial_trace();

    // sum_ij (||S_i S_j^T||_F^2 - d) tr(D_ij)
    let mut block_energy_term = 0.0;
    for i in 0..s.n() {
        for j in 0..s.n() {
            let bsq = gram.view((i * db, j * db), (db, db)).norm_squared();
            block_energy_term += (bsq - d) * pt[(i, j)];
        }
    }
    let signal_coupling = delta.dense().dot(&g_gram) - delta.dense().dot(&gram);

    let lhs2 = (p - d) * zs_sq;
    let rhs2 =
        (p - 2.0 * d) * n * n * d + gram_sq * d + block_energy_term + (p - d) * signal_coupling;
    let second_order_margin = lhs2 - rhs2;

    let ds_sq = delta.mul_stacked(s.stacked()).norm_squared();
    let first_order_margin = gram_sq - (zs_sq - ds_sq / n);

    let noise_norm = delta.operator_norm();
    let gamma = if noise_norm == 0.0 {
        1.0
    } else {
        (crate::blockmat::operator_norm_dense(&pt)? / noise_norm).max(1.0)
    };
    let distance = distance_to_sync(s, g)?;
    let (proximity_bound, proximity_ok) = if s.p() > 2 * s.d() {
        let delta_const = (2.0 + 5.0f64.sqrt()) * (p + d) * gamma / (p - 2.0 * d);
        let bound = delta_const * (d / n).sqrt() * noise_norm;
        (Some(bound), Some(distance <= bound))
    } else {
        (None, None)
    };

    Ok(BmAuditReport {
        second_order_margin,
        first_order_margin,
        distance,
        proximity_bound,
        gamma,
        proximity_ok,
    })
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
