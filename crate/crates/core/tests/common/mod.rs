//! Shared test oracles: finite differences of the objective along a locally
//! implemented polar retraction. Kept independent of the library's projection
//! path (the retraction here goes through an eigendecomposition of M M^T, not
//! the SVD the manifold module uses).

use nalgebra::DMatrix;
use orthosync::{StiefelTuple, SyncProblem, TangentTuple};

/// Polar retraction of one block: (M M^T)^{-1/2} M with M = S_i + t Y_i.
fn retract_block(s_i: &DMatrix<f64>, y_i: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let m = s_i + y_i.scale(t);
    let gram = &m * m.transpose();
    let eig = gram.symmetric_eigen();
    let mut inv_sqrt = DMatrix::zeros(m.nrows(), m.nrows());
    for k in 0..m.nrows() {
        let lam = eig.eigenvalues[k];
        assert!(lam > 1e-14, "retraction hit a degenerate block");
        let u = eig.eigenvectors.column(k);
        inv_sqrt += (u * u.transpose()).scale(1.0 / lam.sqrt());
    }
    inv_sqrt * m
}

/// Whole-tuple retraction.
pub fn retract(s: &StiefelTuple, y: &TangentTuple, t: f64) -> StiefelTuple {
    let (n, d, p) = (s.n(), s.d(), s.p());
    let mut stacked = DMatrix::zeros(n * d, p);
    for i in 0..n {
        let block = retract_block(&s.block(i), &y.block(i), t);
        stacked.rows_mut(i * d, d).copy_from(&block);
    }
    StiefelTuple::from_stacked(n, d, p, stacked).expect("retraction stays on the manifold")
}

/// Central first difference of f(retract(S, Y, .)) at 0.
pub fn directional_derivative_fd(
    problem: &SyncProblem,
    s: &StiefelTuple,
    y: &TangentTuple,
    t: f64,
) -> f64 {
    let fp = problem.objective(&retract(s, y, t)).unwrap();
    let fm = problem.objective(&retract(s, y, -t)).unwrap();
    (fp - fm) / (2.0 * t)
}

/// Central second difference of f(retract(S, Y, .)) at 0.
pub fn second_derivative_fd(
    problem: &SyncProblem,
    s: &StiefelTuple,
    y: &TangentTuple,
    t: f64,
) -> f64 {
    let fp = problem.objective(&retract(s, y, t)).unwrap();
    let f0 = problem.objective(s).unwrap();
    let fm = problem.objective(&retract(s, y, -t)).unwrap();
    (fp - 2.0 * f0 + fm) / (t * t)
}

/// Unit-norm random tangent tuple at S.
pub fn unit_tangent(s: &StiefelTuple, seed: u64) -> TangentTuple {
    let mut rng = orthosync::rng::stream_rng(&[seed, 0x7467_6e74]);
    let y = orthosync::landscape::random_tangent(s, &mut rng, false);
    let norm = y.norm();
    assert!(norm > 1e-8, "degenerate tangent sample at seed {seed}");
    TangentTuple::from_stacked(y.n(), y.d(), y.p(), y.stacked().unscale(norm)).unwrap()
}
