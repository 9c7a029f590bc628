//! Generalized projected power method.
//!
//! One step maps every block simultaneously (Jacobi-style) through the polar
//! projection of the data-weighted sum:
//! S_i <- P(sum_j A_ij S_j). Two regimes share the iteration:
//!
//! * candidate regime: p = d, initialized at the ground truth, the candidate
//!   generator for the semidefinite relaxation;
//! * factorized regime: p > d, random initialization on the Stiefel product.
//!
//! The iteration stops as certified as soon as ||(Lambda - A) S||_op falls
//! under `residual_tol` while lambda_{d+1}(Lambda - A) exceeds `gap_tol`, or
//! earlier at a numerical fixed point, or at `max_iters` (default 500).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::certify::{lambda_from_product, residual_from_product};
use crate::manifold::{polar_project, StiefelTuple};
use crate::model::SyncProblem;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Below this side length the eigen-gap is evaluated at every candidate
/// iteration; above it, on a stride of 10 (the gap dominates the cost).
const EAGER_GAP_SIDE: usize = 600;

/// Iterations to wait before re-evaluating the gap after a failed attempt.
const GAP_RETRY_STRIDE: usize = 10;

/// Starting point of the iteration.
#[derive(Debug, Clone)]
pub enum Init {
    /// Ground-truth blocks, zero-padded to width p (the candidate regime).
    GroundTruth,
    /// Independent uniform blocks drawn from the given seed.
    Random(u64),
    /// Caller-provided tuple.
    Given(StiefelTuple),
}

/// Solver knobs. `p` is the factorization width; all tolerances are strict.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop threshold on ||(Lambda - A) S||_op.
    pub residual_tol: f64,
    /// Stop threshold on lambda_{d+1}(Lambda - A).
    pub gap_tol: f64,
    /// Threshold on ||S' - S||_F / sqrt(nd) declaring a fixed point.
    pub fixed_point_tol: f64,
    pub p: usize,
    pub init: Init,
}

impl SolverConfig {
    pub fn new(p: usize) -> Self {
        Self {
            max_iters: 500,
            residual_tol: 1e-6,
            gap_tol: 1e-8,
            fixed_point_tol: 1e-10,
            p,
            init: Init::GroundTruth,
        }
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn tolerances(&self) -> crate::certify::Tolerances {
        crate::certify::Tolerances {
            residual_tol: self.residual_tol,
            gap_tol: self.gap_tol,
        }
    }

    fn validate(&self, problem: &SyncProblem) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0 && self.gap_tol > 0.0 && self.fixed_point_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.p < problem.d() {
            return Err(Error::InvalidInput(format!(
                "factorization width p = {} below d = {}",
                self.p,
                problem.d()
            )));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual and eigen-gap conditions both held.
    CertifiedStop,
    /// The iterate stopped moving before certification.
    FixedPoint,
    /// Iteration budget exhausted.
    MaxIters,
    /// A polar projection stayed rank-deficient after the jitter retry.
    AbortedRankDeficient,
}

/// Per-iteration record of the solve.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    /// Objective f(S) at the iterate opening each iteration.
    pub objectives: Vec<f64>,
    /// Residual ||(Lambda - A) S||_op at the same iterates.
    pub residuals: Vec<f64>,
    /// Iterations executed.
    pub iterations: usize,
    pub termination: Termination,
    /// Last evaluated eigen-gap, if any attempt was made.
    pub gap: Option<f64>,
}

/// One simultaneous power step from S: every block becomes
/// P(sum_j A_ij S_j), all sums taken at the old iterate.
///
/// A rank-deficient block is retried once with a seeded 1e-8 Gaussian jitter;
/// a second failure propagates as `RankDeficient`.
pub fn power_step(problem: &SyncProblem, s: &StiefelTuple) -> Result<StiefelTuple> {
    check_dims("power_step", problem, s)?;
    let t_mat = problem.data().mul_stacked(s.stacked());
    step_from_product(problem, s, &t_mat, 0)
}

fn step_from_product(
    problem: &SyncProblem,
    s: &StiefelTuple,
    t_mat: &DMatrix<f64>,
    iter: usize,
) -> Result<StiefelTuple> {
    let (n, d, p) = (s.n(), s.d(), s.p());
    let mut stacked = DMatrix::zeros(n * d, p);
    for i in 0..n {
        let ti = t_mat.rows(i * d, d).into_owned();
        let block = match polar_project(&ti) {
            Ok(b) => b,
            Err(Error::RankDeficient { .. }) => {
                let jittered = jitter(&ti, problem.seed(), iter as u64, i as u64);
                polar_project(&jittered)?
            }
            Err(e) => return Err(e),
        };
        stacked.rows_mut(i * d, d).copy_from(&block);
    }
    StiefelTuple::from_stacked(n, d, p, stacked)
}

fn jitter(m: &DMatrix<f64>, seed: u64, iter: u64, block: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(&[seed, iter, block, 0x6a69_7474]);
    m.map(|v| v + 1e-8 * rng.sample::<f64, _>(StandardNormal))
}

/// Residual ||(Lambda - A) S||_op of the first-order condition at S; zero
/// exactly at critical points.
///
/// Degenerate corner: at p = d = 1 the manifold is the discrete sign cube and
/// the identity holds at every point (the multiplier absorbs the sign), so the
/// residual is identically zero there; optimality separation comes from the
/// certificate's eigen-gap alone.
pub fn check_fixed_point(problem: &SyncProblem, s: &StiefelTuple) -> Result<f64> {
    check_dims("check_fixed_point", problem, s)?;
    let t_mat = problem.data().mul_stacked(s.stacked());
    let lambda = lambda_from_product(s, &t_mat);
    Ok(residual_from_product(&lambda, s, &t_mat))
}

/// Runs the projected power iteration from the configured initialization.
///
/// Rank-deficiency aborts are recorded in the trace (termination
/// `AbortedRankDeficient`), not thrown; the last valid iterate is returned.
pub fn solve(problem: &SyncProblem, config: &SolverConfig) -> Result<(StiefelTuple, SolveTrace)> {
    config.validate(problem)?;
    let (n, d) = (problem.n(), problem.d());
    let nd = n * d;
    let mut s = initial_tuple(problem, config)?;

    let mut objectives = Vec::new();
    let mut residuals = Vec::new();
    let mut last_gap = None;
    let mut next_gap_iter = 1usize;
    let eager = nd <= EAGER_GAP_SIDE;

    for iter in 1..=config.max_iters {
        let t_mat = problem.data().mul_stacked(s.stacked());
        let lambda = lambda_from_product(&s, &t_mat);
        let residual = residual_from_product(&lambda, &s, &t_mat);
        objectives.push(t_mat.dot(s.stacked()));
        residuals.push(residual);

        if residual < config.residual_tol
            && iter >= next_gap_iter
            && (eager || iter % GAP_RETRY_STRIDE == 0 || iter == 1)
        {
            let c = lambda.to_block_matrix().sub(problem.data())?;
            let gap = c.eigen_low(d + 1)?[d];
            last_gap = Some(gap);
            if gap > config.gap_tol {
                return Ok((
                    s,
                    SolveTrace {
                        objectives,
                        residuals,
                        iterations: iter,
                        termination: Termination::CertifiedStop,
                        gap: last_gap,
                    },
                ));
            }
            // Uncertifiable for now; do not re-pay the eigensolve every step.
            next_gap_iter = iter + GAP_RETRY_STRIDE;
        }

        let next = match step_from_product(problem, &s, &t_mat, iter) {
            Ok(next) => next,
            Err(Error::RankDeficient { .. }) => {
                return Ok((
                    s,
                    SolveTrace {
                        objectives,
                        residuals,
                        iterations: iter,
                        termination: Termination::AbortedRankDeficient,
                        gap: last_gap,
                    },
                ));
            }
            Err(e) => return Err(e),
        };

        let movement = (next.stacked() - s.stacked()).norm() / (nd as f64).sqrt();
        s = next;
        if movement < config.fixed_point_tol {
            return Ok((
                s,
                SolveTrace {
                    objectives,
                    residuals,
                    iterations: iter,
                    termination: Termination::FixedPoint,
                    gap: last_gap,
                },
            ));
        }
    }

    Ok((
        s,
        SolveTrace {
            objectives,
            residuals,
            iterations: config.max_iters,
            termination: Termination::MaxIters,
            gap: last_gap,
        },
    ))
}

fn initial_tuple(problem: &SyncProblem, config: &SolverConfig) -> Result<StiefelTuple> {
    let (n, d, p) = (problem.n(), problem.d(), config.p);
    match &config.init {
        Init::GroundTruth => {
            let g = problem.ground_truth().ok_or_else(|| {
                Error::InvalidInput("ground-truth initialization needs a ground truth".into())
            })?;
            let mut stacked = DMatrix::zeros(n * d, p);
            stacked.columns_mut(0, d).copy_from(g.stacked());
            Ok(StiefelTuple::from_stacked(n, d, p, stacked)?)
        }
        Init::Random(seed) => crate::manifold::random_stiefel(n, d, p, *seed),
        Init::Given(t) => {
            if t.n() != n || t.d() != d || t.p() != p {
                return Err(Error::dim(
                    "solve init",
                    format!("n={n}, d={d}, p={p}"),
                    format!("n={}, d={}, p={}", t.n(), t.d(), t.p()),
                ));
            }
            Ok(t.clone())
        }
    }
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
