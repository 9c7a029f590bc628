//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured quantities (visible with `--nocapture`).

mod fd;

use std::time::Instant;

use orthosync::certify::{certify, compute_lambda, proximity_check, Tolerances};
use orthosync::landscape::{bm_inequality_audit, hessian_quadform, riemannian_gradient};
use orthosync::manifold::{distance_to_sync, random_stiefel, StiefelTuple};
use orthosync::model::kappa_to_sigma;
use orthosync::oracle::brute_force_z2;
use orthosync::solver::{solve, Init, SolverConfig, Termination};
use orthosync::{BlockMatrix, SyncProblem, Verdict};
use orthosync_cli::{run_phase_transition, ExperimentGrid, Regime};

/// Criterion 1: noiseless exactness across d in {1,2,3,5}, n in {10,100}.
#[test]
fn criterion_1_noiseless_exactness() {
    for d in [1usize, 2, 3, 5] {
        for n in [10usize, 100] {
            let started = Instant::now();
            let problem = SyncProblem::generate_gaussian(n, d, 0.0, 0).unwrap();
            let (s, trace) = solve(&problem, &SolverConfig::new(d)).unwrap();
            let elapsed = started.elapsed().as_secs_f64();
            assert_eq!(
                trace.termination,
                Termination::CertifiedStop,
                "d={d}, n={n}: {trace:?}"
            );
            assert!(
                trace.iterations <= 2,
                "d={d}, n={n}: took {} iterations",
                trace.iterations
            );
            let gap = trace.gap.expect("certified stop evaluates the gap");
            assert!(
                (gap - n as f64).abs() <= 1e-8 * n as f64,
                "d={d}, n={n}: gap {gap} not n"
            );
            let z = StiefelTuple::synchronized(n, d, d);
            let df = distance_to_sync(&s, &z).unwrap();
            assert!(df <= 1e-8, "d={d}, n={n}: d_F {df}");
            assert!(elapsed < 1.0, "d={d}, n={n}: took {elapsed:.2}s");
        }
    }
    println!("[PASS] criterion 1: noiseless exactness (certified <= 2 iters, gap = n, d_F <= 1e-8, < 1 s/case)");
}

/// Criterion 2: certified d = 1 solutions agree with exhaustive enumeration.
#[test]
fn criterion_2_oracle_equivalence_d1() {
    let started = Instant::now();
    let n = 10;
    let mut certified = 0usize;
    let mut total = 0usize;
    for (ki, kappa) in [0.1, 0.2, 0.3].iter().enumerate() {
        let trials = if ki < 2 { 17 } else { 16 };
        for trial in 0..trials {
            total += 1;
            let seed = 1000 * ki as u64 + trial;
            let sigma = kappa_to_sigma(*kappa, n, 1);
            let problem = SyncProblem::generate_gaussian(n, 1, sigma, seed).unwrap();
            let (s, _) = solve(&problem, &SolverConfig::new(1)).unwrap();
            let cert = certify(&problem, &s, Tolerances::default()).unwrap();
            if cert.verdict != Verdict::CertifiedUniqueRankD {
                continue;
            }
            certified += 1;
            let best = brute_force_z2(&problem).unwrap();
            let objective = problem.objective(&s).unwrap();
            assert!(
                (objective - best.best_objective).abs() <= 1e-8 * (1.0 + best.best_objective.abs()),
                "seed {seed}: objective {objective} vs enumerated {}",
                best.best_objective
            );
            let flip = s.stacked()[(0, 0)].signum() * best.best_signs[0].signum();
            for i in 0..n {
                assert_eq!(
                    s.stacked()[(i, 0)].signum() * flip,
                    best.best_signs[i],
                    "seed {seed}: sign mismatch at node {i}"
                );
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(total, 50);
    assert!(
        certified >= 20,
        "only {certified}/50 certified; equivalence check too vacuous"
    );
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
    println!(
        "[PASS] criterion 2: oracle equivalence at d = 1 ({certified}/50 certified, all matched, {elapsed:.1}s)"
    );
}

/// Criterion 3: candidate-regime phase transition at d = 3, n = 200.
#[test]
fn criterion_3_sdp_phase_transition_cells() {
    let started = Instant::now();
    let grid = ExperimentGrid {
        kappa_values: vec![0.2, 0.6],
        n_values: vec![200],
        d: 3,
        p: 3,
        trials: 20,
        regime: Regime::SdpCandidate,
        base_seed: 1,
        max_iters: 500,
    };
    let results = run_phase_transition(&grid, 0).unwrap();
    let tight = &results[0];
    let noisy = &results[1];
    assert_eq!(tight.kappa, 0.2);
    assert!(
        tight.successes >= 19,
        "kappa = 0.2: only {}/{} certified",
        tight.successes,
        tight.trials
    );
    assert_eq!(noisy.kappa, 0.6);
    assert!(
        noisy.successes <= 5,
        "kappa = 0.6: {}/{} certified, expected the loose regime",
        noisy.successes,
        noisy.trials
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.0}s");
    println!(
        "[PASS] criterion 3: phase transition d=3, n=200 ({}/20 at kappa 0.2, {}/20 at kappa 0.6, {elapsed:.0}s)",
        tight.successes, noisy.successes
    );
}

/// Criterion 4: factorized regime certifies rank-d global optima from random
/// initializations at p = 2d.
#[test]
fn criterion_4_low_rank_regime() {
    let started = Instant::now();
    let grid = ExperimentGrid {
        kappa_values: vec![0.2],
        n_values: vec![100],
        d: 3,
        p: 6,
        trials: 20,
        regime: Regime::BurerMonteiro,
        base_seed: 2,
        max_iters: 500,
    };
    let results = run_phase_transition(&grid, 0).unwrap();
    let cell = &results[0];
    assert!(
        cell.successes >= 19,
        "only {}/{} certified rank-d optima",
        cell.successes,
        cell.trials
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.0}s");
    println!(
        "[PASS] criterion 4: low-rank regime d=3, p=6, n=100 ({}/20 certified, {elapsed:.0}s)",
        cell.successes
    );
}

/// Criterion 5: Gaussian noise operator norm matches the 2 sqrt(nd) law.
#[test]
fn criterion_5_wigner_norm_sanity() {
    let (n, d) = (1000usize, 3usize);
    let scale = 2.0 * ((n * d) as f64).sqrt();
    let mut ratios = Vec::new();
    for seed in 0..5u64 {
        let problem = SyncProblem::generate_gaussian(n, d, 1.0, seed).unwrap();
        let w = problem.delta().unwrap();
        let ratio = w.operator_norm() / scale;
        assert!(
            (0.95..=1.05).contains(&ratio),
            "sample {seed}: ratio {ratio}"
        );
        ratios.push(ratio);
    }
    println!("[PASS] criterion 5: Wigner norm sanity at nd = 3000 (ratios {ratios:?})");
}

/// Criterion 6: gradient and Hessian quadratic form match finite differences.
#[test]
fn criterion_6_derivative_checks() {
    let dims = [
        (3usize, 2usize, 4usize),
        (4, 2, 3),
        (5, 1, 2),
        (3, 3, 5),
        (6, 2, 2),
    ];
    for seed in 0..100u64 {
        let (n, d, p) = dims[(seed % dims.len() as u64) as usize];
        let sigma = 0.2 + 0.1 * ((seed % 7) as f64);
        let problem = SyncProblem::generate_gaussian(n, d, sigma, seed).unwrap();
        let s = random_stiefel(n, d, p, seed.wrapping_add(11)).unwrap();
        let y = fd::unit_tangent(&s, seed.wrapping_add(17));
        let grad = riemannian_gradient(&problem, &s).unwrap();
        let analytic = 2.0 * grad.stacked().dot(y.stacked());
        let numeric = fd::directional_derivative_fd(&problem, &s, &y, 1e-6);
        let scale = analytic.abs().max(1.0);
        assert!(
            (analytic - numeric).abs() < 1e-5 * scale,
            "gradient seed {seed}: {analytic} vs {numeric}"
        );
        if seed < 50 {
            let analytic2 = 2.0 * hessian_quadform(&problem, &s, &y).unwrap();
            let numeric2 = fd::second_derivative_fd(&problem, &s, &y, 2e-4);
            let scale2 = analytic2.abs().max(1.0);
            assert!(
                (analytic2 - numeric2).abs() < 1e-4 * scale2,
                "hessian seed {seed}: {analytic2} vs {numeric2}"
            );
        }
    }
    println!(
        "[PASS] criterion 6: 100 gradient checks (rel < 1e-5) and 50 Hessian checks (rel < 1e-4)"
    );
}

/// Criterion 7: the deterministic lemma suite, zero violations allowed.
#[test]
fn criterion_7_lemma_suite() {
    // Hadamard contraction over 200 random pairs.
    for rng_seed in 1..=200u64 {
        let n = 3 + (rng_seed % 3) as usize;
        let d = 1 + (rng_seed % 3) as usize;
        let p = d + (rng_seed % 4) as usize;
        let s = random_stiefel(n, d, p, rng_seed).unwrap();
        let mut rng = orthosync::rng::stream_rng(&[rng_seed, 0xff]);
        use rand::Rng;
        let side = n * d;
        let x = BlockMatrix::from_dense(
            n,
            d,
            nalgebra::DMatrix::from_fn(side, side, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            }),
        )
        .unwrap();
        let had = x.hadamard_with_gram(&s).unwrap();
        assert!(
            had.operator_norm() <= x.operator_norm() + 1e-10,
            "Hadamard bound violated at seed {rng_seed}"
        );
    }

    // Sandwich inequality over 120 random tuples.
    for seed in 0..120u64 {
        let n = 4 + (seed % 4) as usize;
        let d = 1 + (seed % 3) as usize;
        let p = d + (seed % 3) as usize;
        let z = StiefelTuple::synchronized(n, d, d);
        let s = random_stiefel(n, d, p, seed.wrapping_add(500)).unwrap();
        let df2 = match distance_to_sync(&s, &z) {
            Ok(df) => df.powi(2),
            Err(_) => continue,
        };
        let mid = (n * n * d) as f64 - (z.stacked().transpose() * s.stacked()).norm_squared();
        assert!(
            0.5 * n as f64 * df2 <= mid + 1e-8,
            "sandwich left at seed {seed}"
        );
        assert!(
            mid <= n as f64 * df2 + 1e-8,
            "sandwich right at seed {seed}"
        );
    }

    // Smallest singular value of Z^T S under the proximity premise (delta=4),
    // over 100 solver outputs.
    let (n, d, p) = (24usize, 2usize, 4usize);
    let z = StiefelTuple::synchronized(n, d, d);
    let mut premise_held = 0usize;
    for seed in 0..100u64 {
        let sigma = kappa_to_sigma(0.25, n, d);
        let problem = SyncProblem::generate_gaussian(n, d, sigma, seed).unwrap();
        let config = SolverConfig::new(p).with_init(Init::Random(seed.wrapping_add(900)));
        let (s, _) = solve(&problem, &config).unwrap();
        let delta = problem.delta().unwrap();
        let df = distance_to_sync(&s, &z).unwrap();
        let m = z.stacked().transpose() * s.stacked();
        let sigma_min = m
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(
            sigma_min >= n as f64 - df * df / 2.0 - 1e-8,
            "unconditional sigma_min bound violated at seed {seed}"
        );
        if proximity_check(&s, &z, &delta, 4.0).unwrap() {
            premise_held += 1;
            let noise_norm = delta.operator_norm();
            let bound = n as f64 - 16.0 * (d as f64) * noise_norm * noise_norm / (2.0 * n as f64);
            assert!(
                sigma_min >= bound - 1e-8,
                "premise-gated bound violated at seed {seed}"
            );
        }
    }
    assert!(
        premise_held >= 50,
        "sigma_min premise held only {premise_held}/100 times"
    );

    // Multiplier floor Lambda_ii >= I_d and the delta = 4 proximity bound at
    // 100 certified candidate-regime solutions.
    let mut certified_points = 0usize;
    let mut attempts = 0u64;
    while certified_points < 100 && attempts < 140 {
        let d = 1 + (attempts % 3) as usize;
        let n = 20;
        let sigma = kappa_to_sigma(0.2, n, d);
        let problem = SyncProblem::generate_gaussian(n, d, sigma, attempts).unwrap();
        attempts += 1;
        let (s, _) = solve(&problem, &SolverConfig::new(d)).unwrap();
        let cert = certify(&problem, &s, Tolerances::default()).unwrap();
        if cert.verdict != Verdict::CertifiedUniqueRankD {
            continue;
        }
        certified_points += 1;
        let lambda = compute_lambda(&problem, &s).unwrap();
        for (i, lmin) in lambda.lambda_min_per_block().iter().enumerate() {
            assert!(
                *lmin >= 1.0 - 1e-6,
                "multiplier floor violated at block {i}, attempt {attempts}: {lmin}"
            );
        }
        let zref = StiefelTuple::synchronized(n, d, d);
        let delta = problem.delta().unwrap();
        assert!(
            proximity_check(&s, &zref, &delta, 4.0).unwrap(),
            "certified point escapes the delta = 4 proximity radius at attempt {attempts}"
        );
    }
    assert!(
        certified_points >= 100,
        "only {certified_points} certified points collected"
    );

    // Critical-point inequality margins and the landscape proximity bound at
    // 100 deeply converged factorized solutions.
    let mut audited = 0usize;
    let mut audit_attempts = 0u64;
    let (n, d) = (16usize, 2usize);
    let p = 2 * d + 1;
    while audited < 100 && audit_attempts < 130 {
        let seed = audit_attempts;
        audit_attempts += 1;
        let sigma = kappa_to_sigma(0.2, n, d);
        let problem = SyncProblem::generate_gaussian(n, d, sigma, seed.wrapping_add(3000)).unwrap();
        let mut config = SolverConfig::new(p).with_init(Init::Random(seed.wrapping_add(4000)));
        config.residual_tol = 1e-9;
        config.fixed_point_tol = 1e-14;
        config.max_iters = 3000;
        let (s, _) = solve(&problem, &config).unwrap();
        let report = match bm_inequality_audit(&problem, &s) {
            Ok(r) => r,
            Err(orthosync::Error::NotCritical { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        audited += 1;
        assert!(
            report.second_order_margin >= -1e-6,
            "second-order margin {} at seed {seed}",
            report.second_order_margin
        );
        assert!(
            report.first_order_margin >= -1e-6,
            "first-order margin {} at seed {seed}",
            report.first_order_margin
        );
        assert_eq!(
            report.proximity_ok,
            Some(true),
            "landscape proximity bound failed at seed {seed}: {report:?}"
        );
    }
    assert!(
        audited >= 100,
        "only {audited} converged factorized points audited"
    );

    println!(
        "[PASS] criterion 7: lemma suite (200 Hadamard, 120 sandwich, 100 sigma_min ({premise_held} premise), 100 multiplier/proximity, {audited} audits; zero violations)"
    );
}

/// Criterion 8: identical CLI invocations produce identical experiment CSVs.
///
/// The wall-time column `mean_seconds` is inherently non-reproducible and is
/// masked before comparison; every other byte, including the full heatmap
/// matrix and PGM, must match exactly.
#[test]
fn criterion_8_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_orthosync");
    let base = std::env::temp_dir().join(format!("orthosync-accept8-{}", std::process::id()));
    let run = |tag: &str| {
        let dir = base.join(tag);
        std::fs::create_dir_all(&dir).unwrap();
        let status = std::process::Command::new(bin)
            .args([
                "--seed",
                "12345",
                "--threads",
                "2",
                "--out-dir",
                dir.to_str().unwrap(),
                "phase-transition",
                "--d",
                "2",
                "--kappas",
                "0,0.25",
                "--ns",
                "20,30",
                "--trials",
                "3",
                "--pgm",
            ])
            .status()
            .expect("running the CLI");
        assert!(status.success(), "CLI run {tag} failed");
        dir
    };
    let dir_a = run("a");
    let dir_b = run("b");

    let read = |dir: &std::path::Path, name: &str| std::fs::read_to_string(dir.join(name)).unwrap();
    assert_eq!(
        read(&dir_a, "heatmap.csv"),
        read(&dir_b, "heatmap.csv"),
        "heatmap bytes differ between identical runs"
    );
    assert_eq!(
        read(&dir_a, "heatmap.pgm"),
        read(&dir_b, "heatmap.pgm"),
        "PGM bytes differ between identical runs"
    );
    let strip_timing = |text: String| -> String {
        text.lines()
            .map(|line| match line.rfind(',') {
                Some(pos) => &line[..pos],
                None => line,
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_timing(read(&dir_a, "results.csv")),
        strip_timing(read(&dir_b, "results.csv")),
        "deterministic results columns differ between identical runs"
    );
    println!(
        "[PASS] criterion 8: byte-identical experiment CSVs across reruns (timing column masked)"
    );
}
