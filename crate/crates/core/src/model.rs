//! Synchronization instances: observed data A = G G^T + Delta with orthogonal
//! ground-truth blocks, the Gaussian benchmark A = Z Z^T + sigma W, and the
//! change of variable that rotates any instance into canonical form
//! (ground truth Z, all identity blocks).
//!
//! Diagonal blocks are pinned: A_ii = I_d and Delta_ii = 0. The Gaussian noise
//! W samples i.i.d. standard normal entries on the upper block triangle and
//! mirrors W_ji = W_ij^T.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blockmat::BlockMatrix;
use crate::manifold::StiefelTuple;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Noise ensemble an instance was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    None,
    Custom,
}

/// One synchronization instance.
#[derive(Debug, Clone)]
pub struct SyncProblem {
    n: usize,
    d: usize,
    a: BlockMatrix,
    sigma: f64,
    ground_truth: Option<StiefelTuple>,
    seed: u64,
    noise_kind: NoiseKind,
}

/// Noise level for the grid parameterization sigma = kappa sqrt(n/d).
pub fn kappa_to_sigma(kappa: f64, n: usize, d: usize) -> f64 {
    kappa * (n as f64 / d as f64).sqrt()
}

impl SyncProblem {
    /// Gaussian benchmark instance in canonical form: A = Z Z^T + sigma W,
    /// deterministic per (n, d, seed).
    pub fn generate_gaussian(n: usize, d: usize, sigma: f64, seed: u64) -> Result<Self> {
        if n < 2 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "generate_gaussian needs n >= 2, d >= 1; got n={n}, d={d}"
            )));
        }
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma must be >= 0, got {sigma}"
            )));
        }
        let noise_kind = if sigma == 0.0 {
            NoiseKind::None
        } else {
            NoiseKind::Gaussian
        };
        let a = if sigma == 0.0 {
            BlockMatrix::sync_gram(n, d)
        } else {
            let w = gaussian_noise(n, d, seed);
            BlockMatrix::sync_gram(n, d).add(&w.scale(sigma))?
        };
        Ok(Self {
            n,
            d,
            a,
            sigma,
            ground_truth: Some(StiefelTuple::synchronized(n, d, d)),
            seed,
            noise_kind,
        })
    }

    /// Canonical instance with caller-provided noise: A = Z Z^T + Delta.
    /// Delta must be symmetric with zero diagonal blocks (the deterministic
    /// adversarial hook for the bound evaluators).
    pub fn from_custom_noise(n: usize, d: usize, delta: BlockMatrix) -> Result<Self> {
        if delta.n() != n || delta.d() != d {
            return Err(Error::dim(
                "from_custom_noise",
                format!("n={n}, d={d}"),
                format!("n={}, d={}", delta.n(), delta.d()),
            ));
        }
        check_zero_diagonal_blocks(&delta)?;
        let a = BlockMatrix::sync_gram(n, d).add(&delta)?;
        Ok(Self {
            n,
            d,
            a,
            sigma: 0.0,
            ground_truth: Some(StiefelTuple::synchronized(n, d, d)),
            seed: 0,
            noise_kind: NoiseKind::Custom,
        })
    }

    /// Instance with a general orthogonal ground truth G and noise Delta:
    /// A_ij = G_i G_j^T + Delta_ij. Used to exercise the canonical reduction.
    pub fn with_general_ground_truth(g: StiefelTuple, delta: BlockMatrix) -> Result<Self> {
        if g.p() != g.d() {
            return Err(Error::InvalidInput(
                "ground truth blocks must be square orthogonal (p = d)".into(),
            ));
        }
        let (n, d) = (g.n(), g.d());
        if delta.n() != n || delta.d() != d {
            return Err(Error::dim(
                "with_general_ground_truth",
                format!("n={n}, d={d}"),
                format!("n={}, d={}", delta.n(), delta.d()),
            ));
        }
        check_zero_diagonal_blocks(&delta)?;
        let signal = BlockMatrix::from_dense(n, d, g.gram_dense())?;
        let a = signal.add(&delta)?;
        Ok(Self {
            n,
            d,
            a,
            sigma: 0.0,
            ground_truth: Some(g),
            seed: 0,
            noise_kind: NoiseKind::Custom,
        })
    }

    /// Wraps pre-built data (deserialization path). `sigma`/`seed`/`noise_kind`
    /// are metadata only.
    pub fn from_parts(
        a: BlockMatrix,
        sigma: f64,
        ground_truth: Option<StiefelTuple>,
        seed: u64,
        noise_kind: NoiseKind,
    ) -> Result<Self> {
        let (n, d) = (a.n(), a.d());
        if let Some(g) = &ground_truth {
            if g.n() != n || g.d() != d || g.p() != d {
                return Err(Error::dim(
                    "SyncProblem::from_parts",
                    format!("ground truth n={n}, d=p={d}"),
                    format!("n={}, d={}, p={}", g.n(), g.d(), g.p()),
                ));
            }
        }
        Ok(Self {
            n,
            d,
            a,
            sigma,
            ground_truth,
            seed,
            noise_kind,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &BlockMatrix {
        &self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    pub fn ground_truth(&self) -> Option<&StiefelTuple> {
        self.ground_truth.as_ref()
    }

    /// Noise part Delta = A - G G^T whenever the ground truth is known.
    pub fn delta(&self) -> Option<BlockMatrix> {
        let g = self.ground_truth.as_ref()?;
        let signal = BlockMatrix::from_dense(self.n, self.d, g.gram_dense()).ok()?;
        self.a.sub(&signal).ok()
    }

    /// Change of variable onto the canonical instance: the new noise blocks
    /// are G_i^T Delta_ij G_j, the ground truth becomes Z, and objective
    /// values correspond bijectively under S_i -> G_i^T S_i.
    pub fn reduce_to_canonical(&self) -> Result<SyncProblem> {
        let g = self.ground_truth.as_ref().ok_or_else(|| {
            Error::InvalidInput("reduce_to_canonical needs a ground truth".into())
        })?;
        let delta = self.delta().expect("ground truth present");
        let (n, d) = (self.n, self.d);
        let reduced = BlockMatrix::from_block_fn(n, d, |i, j| {
            let gi = g.block(i);
            let gj = g.block(j);
            gi.transpose() * delta.block(i, j) * gj
        })?;
        let a = BlockMatrix::sync_gram(n, d).add(&reduced)?;
        Ok(SyncProblem {
            n,
            d,
            a,
            sigma: self.sigma,
            ground_truth: Some(StiefelTuple::synchronized(n, d, d)),
            seed: self.seed,
            noise_kind: self.noise_kind,
        })
    }

    /// Objective f(S) = <A, S S^T> = sum_ij <A_ij, S_i S_j^T>, computed
    /// blockwise through one stacked product.
    pub fn objective(&self, s: &StiefelTuple) -> Result<f64> {
        if s.n() != self.n || s.d() != self.d {
            return Err(Error::dim(
                "objective",
                format!("n={}, d={}", self.n, self.d),
                format!("n={}, d={}", s.n(), s.d()),
            ));
        }
        Ok((self.a.mul_stacked(s.stacked())).dot(s.stacked()))
    }
}

/// Symmetric block-Gaussian noise with zero diagonal blocks: upper-triangle
/// blocks are sampled i.i.d. N(0,1) entrywise, lower blocks mirror their
/// transposes.
fn gaussian_noise(n: usize, d: usize, seed: u64) -> BlockMatrix {
    let mut rng = stream_rng(&[seed, n as u64, d as u64, 0x6e6f_6973]);
    BlockMatrix::from_block_fn(n, d, |i, j| {
        if i == j {
            DMatrix::zeros(d, d)
        } else {
            DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
        }
    })
    .expect("blocks are d x d by construction")
}

fn check_zero_diagonal_blocks(delta: &BlockMatrix) -> Result<()> {
    for i in 0..delta.n() {
        if delta.block(i, i).norm() > 0.0 {
            return Err(Error::InvalidInput(format!(
                "noise must have zero diagonal blocks; block {i} is nonzero"
            )));
        }
    }
    Ok(())
}
