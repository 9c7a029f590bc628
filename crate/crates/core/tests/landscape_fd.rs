//! Finite-difference verification of the Riemannian gradient and Hessian
//! quadratic form along the polar retraction.
//!
//! With the blockwise multiplier convention, the directional derivative of f
//! along a tangent tuple Y is 2 <grad f, Y> and the second derivative is twice
//! the Hessian quadratic form.

mod common;

use common::{directional_derivative_fd, second_derivative_fd, unit_tangent};
use orthosync::landscape::{hessian_quadform, riemannian_gradient};
use orthosync::manifold::random_stiefel;
use orthosync::SyncProblem;

fn case(seed: u64) -> (SyncProblem, orthosync::StiefelTuple) {
    let dims = [
        (3usize, 2usize, 4usize),
        (4, 2, 3),
        (5, 1, 2),
        (3, 3, 5),
        (6, 2, 2),
    ];
    let (n, d, p) = dims[(seed % dims.len() as u64) as usize];
    let sigma = 0.2 + 0.1 * ((seed % 7) as f64);
    let problem = SyncProblem::generate_gaussian(n, d, sigma, seed).unwrap();
    let s = random_stiefel(n, d, p, seed.wrapping_add(1000)).unwrap();
    (problem, s)
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..100u64 {
        let (problem, s) = case(seed);
        let grad = riemannian_gradient(&problem, &s).unwrap();
        let y = unit_tangent(&s, seed.wrapping_add(5000));
        let analytic = 2.0 * grad.stacked().dot(y.stacked());
        let fd = directional_derivative_fd(&problem, &s, &y, 1e-6);
        let scale = analytic.abs().max(1.0);
        assert!(
            (analytic - fd).abs() < 1e-5 * scale,
            "seed {seed}: analytic {analytic} vs fd {fd}"
        );
    }
}

#[test]
fn gradient_error_scales_quadratically_in_the_step() {
    // Central differences carry O(t^2) truncation error; checking the decay
    // from t = 1e-4 to 1e-5 guards against a wrong analytic value, which
    // would show up as a plateau.
    let mut scaled_ok = 0usize;
    let total = 20u64;
    for seed in 0..total {
        let (problem, s) = case(seed.wrapping_add(300));
        let grad = riemannian_gradient(&problem, &s).unwrap();
        let y = unit_tangent(&s, seed.wrapping_add(6000));
        let analytic = 2.0 * grad.stacked().dot(y.stacked());
        let scale = analytic.abs().max(1.0);
        let errs: Vec<f64> = [1e-4, 1e-5, 1e-6, 1e-7]
            .iter()
            .map(|&t| (directional_derivative_fd(&problem, &s, &y, t) - analytic).abs())
            .collect();
        // All steps agree to the acceptance tolerance.
        for (err, t) in errs.iter().zip([1e-4, 1e-5, 1e-6, 1e-7]) {
            assert!(err < &(1e-5 * scale), "seed {seed}, step {t}: error {err}");
        }
        // Quadratic decay where rounding noise does not dominate.
        if errs[0] > 1e-11 * scale && errs[1] < errs[0] / 10.0 {
            scaled_ok += 1;
        }
    }
    assert!(
        scaled_ok >= (total as usize) / 2,
        "quadratic step-size scaling visible in only {scaled_ok}/{total} cases"
    );
}

#[test]
fn hessian_quadform_matches_second_differences() {
    for seed in 0..50u64 {
        let (problem, s) = case(seed.wrapping_add(700));
        let y = unit_tangent(&s, seed.wrapping_add(7000));
        let analytic = 2.0 * hessian_quadform(&problem, &s, &y).unwrap();
        let fd = second_derivative_fd(&problem, &s, &y, 2e-4);
        let scale = analytic.abs().max(1.0);
        assert!(
            (analytic - fd).abs() < 1e-4 * scale,
            "seed {seed}: analytic {analytic} vs fd {fd}"
        );
    }
}
