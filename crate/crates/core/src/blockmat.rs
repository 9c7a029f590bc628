//! Symmetric nd×nd matrices addressed as an n×n grid of d×d blocks, plus the
//! spectral primitives everything else consumes.
//!
//! Storage is one dense symmetric array with block-view accessors: the eigen
//! and SVD routines want contiguous input, and the problem sizes here
//! (nd up to a few thousand) stay comfortably dense. Symmetry is enforced once
//! at construction by averaging with the transpose; all reads assume it.
//!
//! Spectral routines switch between exact dense factorizations at desk scale
//! and residual-certified block-Krylov extraction above it
//! ([`DENSE_SVD_SIDE`], [`DENSE_EIGEN_SIDE`]).

use nalgebra::DMatrix;

use crate::lanczos::block_krylov_extreme_eigs;
use crate::manifold::StiefelTuple;
use crate::{Error, Result};

/// Side length up to which operator norms use a full dense SVD.
pub const DENSE_SVD_SIDE: usize = 512;

/// Side length up to which low eigenvalues use a full dense eigendecomposition.
pub const DENSE_EIGEN_SIDE: usize = 2048;

/// Relative asymmetry allowed in a diagonal block handed to [`BlockDiagonal`].
const BLOCK_SYMMETRY_RTOL: f64 = 1e-12;

/// Symmetric nd×nd matrix viewed as an n×n grid of d×d blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    n: usize,
    d: usize,
    data: DMatrix<f64>,
}

impl BlockMatrix {
    /// Wraps a dense nd×nd matrix, symmetrizing it as (M + M^T)/2. Exact
    /// no-op for already-symmetric input.
    pub fn from_dense(n: usize, d: usize, dense: DMatrix<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "BlockMatrix needs n >= 1, d >= 1; got n={n}, d={d}"
            )));
        }
        let side = n * d;
        if dense.nrows() != side || dense.ncols() != side {
            return Err(Error::dim(
                "BlockMatrix::from_dense",
                format!("{side}x{side}"),
                format!("{}x{}", dense.nrows(), dense.ncols()),
            ));
        }
        if dense.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("BlockMatrix"));
        }
        let data = (&dense + dense.transpose()).scale(0.5);
        Ok(Self { n, d, data })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: DMatrix::zeros(n * d, n * d),
        }
    }

    /// Identity I_{nd}.
    pub fn identity(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: DMatrix::identity(n * d, n * d),
        }
    }

    /// Gram matrix Z Z^T of the fully synchronized state: every block I_d.
    pub fn sync_gram(n: usize, d: usize) -> Self {
        let mut data = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                for k in 0..d {
                    data[(i * d + k, j * d + k)] = 1.0;
                }
            }
        }
        Self { n, d, data }
    }

    /// Builds from a generator on the upper block triangle (i <= j); the lower
    /// triangle is filled with transposes so the result is symmetric by
    /// construction. Diagonal blocks are symmetrized.
    pub fn from_block_fn<F>(n: usize, d: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> DMatrix<f64>,
    {
        let mut data = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in i..n {
                let b = f(i, j);
                if b.nrows() != d || b.ncols() != d {
                    return Err(Error::dim(
                        "BlockMatrix::from_block_fn",
                        format!("{d}x{d}"),
                        format!("{}x{}", b.nrows(), b.ncols()),
                    ));
                }
                let b = if i == j {
                    (&b + b.transpose()).scale(0.5)
                } else {
                    b
                };
                data.view_mut((i * d, j * d), (d, d)).copy_from(&b);
                if i != j {
                    data.view_mut((j * d, i * d), (d, d))
                        .copy_from(&b.transpose());
                }
            }
        }
        Self::from_dense(n, d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.n * self.d
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Owned copy of block (i, j).
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.data
            .view((i * self.d, j * self.d), (self.d, self.d))
            .into_owned()
    }

    /// Block row i as a d×nd matrix (transposed view of the corresponding
    /// block column; same operator norm).
    pub fn block_row(&self, i: usize) -> DMatrix<f64> {
        self.data.rows(i * self.d, self.d).into_owned()
    }

    /// Product with a stacked nd×p matrix.
    pub fn mul_stacked(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        &self.data * s
    }

    /// Partial trace: the n×n matrix of blockwise traces.
    pub fn partial_trace(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut t = 0.0;
                for k in 0..self.d {
                    t += self.data[(i * self.d + k, j * self.d + k)];
                }
                out[(i, j)] = t;
            }
        }
        out
    }

    /// Largest singular value. Dense SVD up to side [`DENSE_SVD_SIDE`],
    /// residual-certified Krylov extraction above.
    pub fn operator_norm(&self) -> f64 {
        self.operator_norm_with_threshold(DENSE_SVD_SIDE)
    }

    fn operator_norm_with_threshold(&self, dense_side: usize) -> f64 {
        if self.side() <= dense_side {
            let svd = self.data.clone().svd(false, false);
            svd.singular_values.iter().cloned().fold(0.0, f64::max)
        } else {
            let tol = 1e-10 * (1.0 + spectral_scale(&self.data));
            let (bottom, top) =
                block_krylov_extreme_eigs(|v| &self.data * v, self.side(), 1, 1, tol, 0x6f70);
            top[0].abs().max(bottom[0].abs())
        }
    }

    /// k smallest eigenvalues, ascending. Dense eigendecomposition up to side
    /// [`DENSE_EIGEN_SIDE`], block-Krylov extraction above.
    pub fn eigen_low(&self, k: usize) -> Result<Vec<f64>> {
        self.eigen_low_with_threshold(k, DENSE_EIGEN_SIDE)
    }

    fn eigen_low_with_threshold(&self, k: usize, dense_side: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.side() {
            return Err(Error::InvalidInput(format!(
                "eigen_low wants 1 <= k <= {}, got {k}",
                self.side()
            )));
        }
        if self.side() <= dense_side {
            let mut eigs: Vec<f64> = self.data.symmetric_eigenvalues().iter().cloned().collect();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            eigs.truncate(k);
            Ok(eigs)
        } else {
            let tol = 1e-9 * (1.0 + spectral_scale(&self.data));
            let (bottom, _) =
                block_krylov_extreme_eigs(|v| &self.data * v, self.side(), k, 1, tol, 0x6c6f);
            Ok(bottom)
        }
    }

    /// Entrywise product with the Gram matrix S S^T of a Stiefel tuple.
    pub fn hadamard_with_gram(&self, s: &StiefelTuple) -> Result<BlockMatrix> {
        if s.n() != self.n || s.d() != self.d {
            return Err(Error::dim(
                "hadamard_with_gram",
                format!("n={}, d={}", self.n, self.d),
                format!("n={}, d={}", s.n(), s.d()),
            ));
        }
        let gram = s.gram_dense();
        BlockMatrix::from_dense(self.n, self.d, self.data.component_mul(&gram))
    }

    /// Sum with another block matrix of the same shape.
    pub fn add(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.zip("BlockMatrix::add", other, |a, b| a + b)
    }

    /// Difference with another block matrix of the same shape.
    pub fn sub(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.zip("BlockMatrix::sub", other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> BlockMatrix {
        BlockMatrix {
            n: self.n,
            d: self.d,
            data: self.data.scale(factor),
        }
    }

    fn zip(
        &self,
        context: &'static str,
        other: &BlockMatrix,
        f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> Result<BlockMatrix> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::dim(
                context,
                format!("n={}, d={}", self.n, self.d),
                format!("n={}, d={}", other.n, other.d),
            ));
        }
        Ok(BlockMatrix {
            n: self.n,
            d: self.d,
            data: f(&self.data, &other.data),
        })
    }
}

/// Largest singular value of an arbitrary finite matrix. The thin side of the
/// residual/noise matrices here is always small, so a dense SVD applies up to
/// [`DENSE_SVD_SIDE`]; larger square matrices go through the symmetrized
/// Gram-operator Krylov path.
pub fn operator_norm_dense(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("operator_norm input"));
    }
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(0.0);
    }
    if r.min(c) <= DENSE_SVD_SIDE {
        let svd = m.clone().svd(false, false);
        Ok(svd.singular_values.iter().cloned().fold(0.0, f64::max))
    } else {
        let scale = spectral_scale(m);
        let tol = 1e-10 * (1.0 + scale * scale);
        let (_, top) =
            block_krylov_extreme_eigs(|v| m.transpose() * (m * v), c, 0, 1, tol, 0x7265_6374);
        Ok(top[0].max(0.0).sqrt())
    }
}

/// Cheap lower-bound-ish scale estimate for residual tolerances:
/// max(||M||_F / sqrt(min side), largest |entry|) <= ||M||_op-ish.
fn spectral_scale(m: &DMatrix<f64>) -> f64 {
    let frob = m.norm();
    let maxabs = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    (frob / (m.nrows().min(m.ncols()) as f64).sqrt()).max(maxabs)
}

/// Block-diagonal symmetric matrix: the multiplier Lambda of the first-order
/// condition, one symmetric d×d block per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal {
    n: usize,
    d: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl BlockDiagonal {
    /// Wraps n d×d blocks, verifying each is symmetric to relative tolerance
    /// 1e-12 and then symmetrizing exactly.
    pub fn from_blocks(n: usize, d: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.len() != n {
            return Err(Error::dim("BlockDiagonal::from_blocks", n, blocks.len()));
        }
        let mut sym_blocks = Vec::with_capacity(n);
        for (i, b) in blocks.into_iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::dim(
                    "BlockDiagonal::from_blocks",
                    format!("{d}x{d}"),
                    format!("{}x{} (block {i})", b.nrows(), b.ncols()),
                ));
            }
            let defect = (&b - b.transpose()).norm();
            if defect > BLOCK_SYMMETRY_RTOL * (1.0 + b.norm()) {
                return Err(Error::InvalidInput(format!(
                    "block {i} asymmetric by {defect:.3e}"
                )));
            }
            sym_blocks.push((&b + b.transpose()).scale(0.5));
        }
        Ok(Self {
            n,
            d,
            blocks: sym_blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    /// Blockwise product with a stacked nd×p matrix.
    pub fn mul_stacked(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(s.nrows(), s.ncols());
        for i in 0..self.n {
            let rows = s.rows(i * self.d, self.d);
            out.rows_mut(i * self.d, self.d)
                .copy_from(&(&self.blocks[i] * rows));
        }
        out
    }

    /// Smallest eigenvalue of each block.
    pub fn lambda_min_per_block(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                b.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Expands into a full block matrix (off-diagonal blocks zero).
    pub fn to_block_matrix(&self) -> BlockMatrix {
        let mut data = DMatrix::zeros(self.n * self.d, self.n * self.d);
        for i in 0..self.n {
            data.view_mut((i * self.d, i * self.d), (self.d, self.d))
                .copy_from(&self.blocks[i]);
        }
        BlockMatrix {
            n: self.n,
            d: self.d,
            data,
        }
    }
}
