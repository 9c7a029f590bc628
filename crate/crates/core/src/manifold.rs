//! Products of Stiefel manifolds and the calculus the power method needs.
//!
//! A point is a tuple S = (S_1, ..., S_n) of d×p row-orthonormal matrices,
//! S_i S_i^T = I_d, stored stacked as an nd×p matrix. The fully synchronized
//! reference Z stacks n identity blocks (p = d). Three primitives matter:
//!
//! * `polar_project` — the metric projection P(M) = U V^T onto St(d,p), the
//!   update map of the power iteration and the polar retraction;
//! * `tangent_project` — orthogonal projection onto the tangent space
//!   {Y : S_i Y^T + Y S_i^T = 0};
//! * `align`/`distance_to_sync` — the optimal right rotation Q = P(Z^T S) and
//!   the distance d_F(S, Z) = min_Q ||S - Z Q||_F it realizes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::stream_rng;
use crate::{Error, Result};

/// Relative sigma_min/sigma_max threshold below which a polar projection is
/// reported rank-deficient instead of silently completed.
pub const POLAR_RANK_TOL: f64 = 1e-12;

/// Frobenius tolerance on S_i S_i^T - I_d accepted at construction.
pub const STIEFEL_TOL: f64 = 1e-10;

/// Frobenius tolerance on S_i Y_i^T + Y_i S_i^T accepted for tangent elements.
pub const TANGENT_TOL: f64 = 1e-10;

/// Tuple of n row-orthonormal d×p blocks, stored stacked as nd×p.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelTuple {
    n: usize,
    d: usize,
    p: usize,
    stacked: DMatrix<f64>,
}

impl StiefelTuple {
    /// Builds a tuple from its stacked nd×p representation, validating the
    /// row-orthonormality of every block.
    pub fn from_stacked(n: usize, d: usize, p: usize, stacked: DMatrix<f64>) -> Result<Self> {
        if n == 0 || d == 0 || p < d {
            return Err(Error::InvalidInput(format!(
                "StiefelTuple needs n >= 1, d >= 1, p >= d; got n={n}, d={d}, p={p}"
            )));
        }
        if stacked.nrows() != n * d || stacked.ncols() != p {
            return Err(Error::dim(
                "StiefelTuple::from_stacked",
                format!("{}x{}", n * d, p),
                format!("{}x{}", stacked.nrows(), stacked.ncols()),
            ));
        }
        if stacked.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("StiefelTuple"));
        }
        let tuple = Self { n, d, p, stacked };
        let defect = tuple.orthonormality_defect();
        if defect > STIEFEL_TOL {
            return Err(Error::InvalidInput(format!(
                "block violates S_i S_i^T = I_d by {defect:.3e} (tolerance {STIEFEL_TOL:.0e})"
            )));
        }
        Ok(tuple)
    }

    /// The fully synchronized tuple: every block is [I_d | 0].
    pub fn synchronized(n: usize, d: usize, p: usize) -> Self {
        let mut stacked = DMatrix::zeros(n * d, p);
        for i in 0..n {
            for k in 0..d {
                stacked[(i * d + k, k)] = 1.0;
            }
        }
        Self { n, d, p, stacked }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Stacked nd×p matrix.
    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    /// Owned copy of block i (d×p).
    pub fn block(&self, i: usize) -> DMatrix<f64> {
        self.stacked.rows(i * self.d, self.d).into_owned()
    }

    /// Largest Frobenius defect ||S_i S_i^T - I_d||_F over the blocks.
    pub fn orthonormality_defect(&self) -> f64 {
        let eye = DMatrix::<f64>::identity(self.d, self.d);
        (0..self.n)
            .map(|i| {
                let b = self.stacked.rows(i * self.d, self.d);
                (b * b.transpose() - &eye).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Dense nd×nd Gram matrix S S^T (blocks S_i S_j^T).
    pub fn gram_dense(&self) -> DMatrix<f64> {
        &self.stacked * self.stacked.transpose()
    }

    /// Right-multiplies every block by the same p×p' matrix.
    pub fn right_multiply(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.p {
            return Err(Error::dim(
                "StiefelTuple::right_multiply",
                format!("{} rows", self.p),
                format!("{} rows", q.nrows()),
            ));
        }
        StiefelTuple::from_stacked(self.n, self.d, q.ncols(), &self.stacked * q)
    }
}

/// Tuple of tangent directions, one d×p block per node, stacked as nd×p.
///
/// Tangency is relative to a base tuple: S_i Y_i^T must be anti-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentTuple {
    n: usize,
    d: usize,
    p: usize,
    stacked: DMatrix<f64>,
}

impl TangentTuple {
    /// Wraps a stacked nd×p matrix; tangency is checked against a base point
    /// separately via [`TangentTuple::tangency_defect`].
    pub fn from_stacked(n: usize, d: usize, p: usize, stacked: DMatrix<f64>) -> Result<Self> {
        if stacked.nrows() != n * d || stacked.ncols() != p {
            return Err(Error::dim(
                "TangentTuple::from_stacked",
                format!("{}x{}", n * d, p),
                format!("{}x{}", stacked.nrows(), stacked.ncols()),
            ));
        }
        Ok(Self { n, d, p, stacked })
    }

    pub fn zeros(n: usize, d: usize, p: usize) -> Self {
        Self {
            n,
            d,
            p,
            stacked: DMatrix::zeros(n * d, p),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    pub fn block(&self, i: usize) -> DMatrix<f64> {
        self.stacked.rows(i * self.d, self.d).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.stacked.norm()
    }

    /// Largest Frobenius norm of S_i Y_i^T + Y_i S_i^T over the blocks.
    pub fn tangency_defect(&self, base: &StiefelTuple) -> f64 {
        assert_eq!((self.n, self.d, self.p), (base.n, base.d, base.p));
        (0..self.n)
            .map(|i| {
                let s = base.stacked.rows(i * self.d, self.d);
                let y = self.stacked.rows(i * self.d, self.d);
                let m = s * y.transpose();
                (&m + m.transpose()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Polar projection P(M) = U V^T of a full-row-rank d×p matrix (p >= d) onto
/// St(d,p); the unique maximizer of <Q, M> over the manifold.
///
/// Columns of the intermediate U are sign-fixed (largest-magnitude entry made
/// nonnegative) so the factor pair is deterministic; the product U V^T itself
/// is already unique whenever sigma_d > 0.
pub fn polar_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (d, p) = (m.nrows(), m.ncols());
    if p < d {
        return Err(Error::dim("polar_project", "p >= d", format!("{d}x{p}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("polar_project input"));
    }
    let svd = m.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= POLAR_RANK_TOL * smax {
        return Err(Error::RankDeficient {
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    let mut u = svd.u.expect("svd requested u");
    let mut v_t = svd.v_t.expect("svd requested v_t");
    for k in 0..u.ncols() {
        let col = u.column(k);
        let mut lead = 0usize;
        for r in 1..col.nrows() {
            if col[r].abs() > col[lead].abs() {
                lead = r;
            }
        }
        if col[lead] < 0.0 {
            u.column_mut(k).neg_mut();
            v_t.row_mut(k).neg_mut();
        }
    }
    Ok(u * v_t)
}

/// Orthogonal projection of a d×p matrix onto the tangent space at `s_i`:
/// Pi - (Pi S_i^T + S_i Pi^T) S_i / 2.
pub fn tangent_project(s_i: &DMatrix<f64>, pi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s_i.shape() != pi.shape() {
        return Err(Error::dim(
            "tangent_project",
            format!("{}x{}", s_i.nrows(), s_i.ncols()),
            format!("{}x{}", pi.nrows(), pi.ncols()),
        ));
    }
    let sym = pi * s_i.transpose() + s_i * pi.transpose();
    Ok(pi - (sym * s_i).scale(0.5))
}

/// Optimal right rotation aligning S with the reference tuple Z (square
/// orthogonal blocks, p = d): the d×p partial-orthogonal minimizer of
/// ||S - Z Q||_F, which equals P(Z^T S) with Z^T S = sum_j Z_j^T S_j.
pub fn align(s: &StiefelTuple, z: &StiefelTuple) -> Result<DMatrix<f64>> {
    check_reference(s, z)?;
    let m = z.stacked.transpose() * &s.stacked;
    polar_project(&m)
}

/// Alignment distance d_F(S, Z) = ||S - Z Q||_F with Q from [`align`].
pub fn distance_to_sync(s: &StiefelTuple, z: &StiefelTuple) -> Result<f64> {
    let q = align(s, z)?;
    Ok((&s.stacked - &z.stacked * q).norm())
}

fn check_reference(s: &StiefelTuple, z: &StiefelTuple) -> Result<()> {
    if z.p != z.d {
        return Err(Error::InvalidInput(format!(
            "reference tuple must have square blocks (p = d), got d={} p={}",
            z.d, z.p
        )));
    }
    if z.n != s.n || z.d != s.d {
        return Err(Error::dim(
            "align",
            format!("n={}, d={}", s.n, s.d),
            format!("n={}, d={}", z.n, z.d),
        ));
    }
    Ok(())
}

/// Independent uniform-ish tuple: each block is the row space of a d×p
/// standard Gaussian matrix, extracted via QR with the positive-diagonal
/// convention. Deterministic for a given seed; the law is invariant under
/// right multiplication by any fixed p×p orthogonal matrix.
pub fn random_stiefel(n: usize, d: usize, p: usize, seed: u64) -> Result<StiefelTuple> {
    if n == 0 || d == 0 || p < d {
        return Err(Error::InvalidInput(format!(
            "random_stiefel needs n >= 1, d >= 1, p >= d; got n={n}, d={d}, p={p}"
        )));
    }
    let mut rng = stream_rng(&[seed, n as u64, d as u64, p as u64, 0x5374_6965]);
    let mut stacked = DMatrix::zeros(n * d, p);
    for i in 0..n {
        let g = DMatrix::from_fn(d, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let block = gaussian_row_space(&g);
        stacked.rows_mut(i * d, d).copy_from(&block);
    }
    StiefelTuple::from_stacked(n, d, p, stacked)
}

/// Row space of a full-row-rank d×p matrix as a row-orthonormal d×p block
/// (QR of the transpose, R diagonal forced positive).
fn gaussian_row_space(g: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = g.transpose().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..q.ncols() {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q.transpose()
}
