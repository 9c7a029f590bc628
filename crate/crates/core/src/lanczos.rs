//! Block-Krylov Rayleigh-Ritz extraction of extreme eigenvalues of large
//! symmetric operators.
//!
//! Dense factorizations stop being reasonable somewhere above side 2000, but
//! the spectra we care about there (certificate matrices, noise matrices) only
//! need a few extreme eigenvalues. A block Krylov basis with full
//! reorthogonalization handles the d-fold eigenvalue clusters a certificate
//! matrix carries at its bottom, which plain single-vector Lanczos resolves
//! unreliably.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::stream_rng;

/// Extreme eigenvalues of a symmetric operator given only matrix-block
/// products. Returns (`k_bottom` smallest ascending, `k_top` largest
/// descending), each Ritz value certified by a residual below `tol`.
///
/// `apply` must implement V -> M V for an N×b block V.
pub(crate) fn block_krylov_extreme_eigs<F>(
    apply: F,
    size: usize,
    k_bottom: usize,
    k_top: usize,
    tol: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let k_max = k_bottom.max(k_top).max(1);
    let block = (k_max + 1).min(size);
    let max_cols = size.min((40 * block).max(240));

    let mut rng = stream_rng(&[seed, size as u64, block as u64, 0x4c61_6e63]);
    let mut basis = DMatrix::<f64>::zeros(size, max_cols);
    let mut images = DMatrix::<f64>::zeros(size, max_cols);
    let mut cols = 0usize;

    // Seed block.
    for _ in 0..block {
        let w = DMatrix::from_fn(size, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        push_orthonormalized(&mut basis, &mut cols, w.column(0).into_owned(), &mut rng);
    }
    let mut imaged = 0usize;
    // Next already-imaged column whose image has not been offered as a new
    // Krylov direction yet.
    let mut image_cursor = 0usize;

    loop {
        // Image the not-yet-imaged basis columns (one block product).
        if imaged < cols {
            let fresh = basis.columns(imaged, cols - imaged).into_owned();
            let out = apply(&fresh);
            images.columns_mut(imaged, cols - imaged).copy_from(&out);
            imaged = cols;
        }

        // Rayleigh-Ritz on the current subspace.
        let q = basis.columns(0, cols);
        let aq = images.columns(0, cols);
        let mut t = q.transpose() * aq;
        // Symmetrize drift from the inexact basis.
        t = (&t + t.transpose()).scale(0.5);
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let mut wanted: Vec<usize> = Vec::new();
        wanted.extend(order.iter().take(k_bottom.min(cols)));
        wanted.extend(order.iter().rev().take(k_top.min(cols)));

        let mut converged = cols >= k_bottom + k_top;
        let mut worst_vectors: Vec<nalgebra::DVector<f64>> = Vec::new();
        for &idx in &wanted {
            let s = eig.eigenvectors.column(idx);
            let y = q * s;
            let ay = aq * s;
            let resid = (&ay - y.scale(eig.eigenvalues[idx])).norm();
            if resid > tol {
                converged = false;
                worst_vectors.push(ay);
            }
        }

        if converged || cols >= max_cols {
            let bottom: Vec<f64> = order
                .iter()
                .take(k_bottom.min(cols))
                .map(|&i| eig.eigenvalues[i])
                .collect();
            let top: Vec<f64> = order
                .iter()
                .rev()
                .take(k_top.min(cols))
                .map(|&i| eig.eigenvalues[i])
                .collect();
            return (bottom, top);
        }

        // Expand with the images of the unconverged Ritz vectors, then top up
        // with the block-Krylov ladder (images of earlier basis columns); a
        // chunk of a few columns per Rayleigh-Ritz rebuild keeps the quadratic
        // reassembly cost down.
        let expand = block.max(4);
        let mut added = 0usize;
        for ay in worst_vectors {
            if cols >= max_cols {
                break;
            }
            if push_orthonormalized(&mut basis, &mut cols, ay, &mut rng) {
                added += 1;
            }
        }
        while added < expand && cols < max_cols && image_cursor < imaged {
            let w = images.column(image_cursor).into_owned();
            image_cursor += 1;
            if push_orthonormalized(&mut basis, &mut cols, w, &mut rng) {
                added += 1;
            }
        }
        if added == 0 {
            // Invariant subspace found; inject a fresh random direction.
            let w = nalgebra::DVector::from_fn(size, |_, _| rng.sample::<f64, _>(StandardNormal));
            if !push_orthonormalized(&mut basis, &mut cols, w, &mut rng) {
                // Basis spans the whole space; the Ritz values are exact.
                continue;
            }
        }
    }
}

/// Orthogonalizes `w` against the current basis (two Gram-Schmidt passes) and
/// appends it. A numerically dependent vector is replaced by a random one;
/// returns false only when the space is exhausted.
fn push_orthonormalized(
    basis: &mut DMatrix<f64>,
    cols: &mut usize,
    mut w: nalgebra::DVector<f64>,
    rng: &mut rand_pcg::Pcg64Mcg,
) -> bool {
    let size = basis.nrows();
    if *cols >= basis.ncols() || *cols >= size {
        return false;
    }
    for attempt in 0..4 {
        for _ in 0..2 {
            if *cols > 0 {
                let q = basis.columns(0, *cols);
                let coeffs = q.transpose() * &w;
                w -= q * coeffs;
            }
        }
        let norm = w.norm();
        if norm > 1e-8 {
            basis.column_mut(*cols).copy_from(&w.unscale(norm));
            *cols += 1;
            return true;
        }
        if attempt == 3 {
            return false;
        }
        w = nalgebra::DVector::from_fn(size, |_, _| rng.sample::<f64, _>(StandardNormal));
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Symmetric matrix with a prescribed spectrum.
    fn with_spectrum(eigs: &[f64], seed: u64) -> DMatrix<f64> {
        let n = eigs.len();
        let mut rng = stream_rng(&[seed, n as u64]);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(eigs));
        let m = &q * lam * q.transpose();
        (&m + m.transpose()).scale(0.5)
    }

    #[test]
    fn resolves_clustered_bottom_eigenvalues() {
        // Certificate-like spectrum: a triple cluster at zero, then a gap.
        let mut eigs = vec![0.0, 1e-9, 2e-9, 4.0, 4.5];
        eigs.extend((0..295).map(|i| 5.0 + i as f64 * 0.1));
        let m = with_spectrum(&eigs, 3);
        let (bottom, top) = block_krylov_extreme_eigs(|v| &m * v, 300, 4, 1, 1e-9 * 40.0, 17);
        assert_eq!(bottom.len(), 4);
        for (got, want) in bottom.iter().zip([0.0, 1e-9, 2e-9, 4.0]) {
            assert!((got - want).abs() < 1e-6, "bottom {got} vs {want}");
        }
        assert!((top[0] - (5.0 + 294.0 * 0.1)).abs() < 1e-6);
    }

    #[test]
    fn matches_dense_on_random_symmetric() {
        let mut rng = stream_rng(&[91, 0]);
        let g = DMatrix::from_fn(120, 120, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = (&g + g.transpose()).scale(0.5);
        let mut dense: Vec<f64> = m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (bottom, top) = block_krylov_extreme_eigs(|v| &m * v, 120, 2, 2, 1e-9 * 20.0, 5);
        assert!((bottom[0] - dense[0]).abs() < 1e-7);
        assert!((bottom[1] - dense[1]).abs() < 1e-7);
        assert!((top[0] - dense[119]).abs() < 1e-7);
        assert!((top[1] - dense[118]).abs() < 1e-7);
    }
}
