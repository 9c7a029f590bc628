//! Experiment grids and the per-cell trial runner.
//!
//! Each cell (kappa, n) runs `trials` independent instances at
//! sigma = kappa sqrt(n/d). A trial succeeds when the final certificate
//! verdict is the unique-rank-d one. Instance and initialization seeds are
//! derived per (base_seed, n, d, kappa-index, trial-index), so any cell is
//! reproducible in isolation and the thread schedule cannot change results.
//! Cells run on a work-stealing pool; trials within a cell stay sequential.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use orthosync::certify::certify;
use orthosync::model::kappa_to_sigma;
use orthosync::rng::stream_seed;
use orthosync::solver::{solve, Init, SolverConfig, Termination};
use orthosync::{SyncProblem, Verdict};

/// Which program the harness probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// p = d, ground-truth initialization; probes relaxation tightness.
    SdpCandidate,
    /// p > d, random initialization; probes the factorized landscape.
    BurerMonteiro,
}

/// Grid specification.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub kappa_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub d: usize,
    pub p: usize,
    pub trials: usize,
    pub regime: Regime,
    pub base_seed: u64,
    pub max_iters: usize,
}

impl ExperimentGrid {
    /// Desk-scale grid for CI runs.
    pub fn ci_default(d: usize, regime: Regime) -> Self {
        Self {
            kappa_values: vec![0.0, 0.2, 0.35, 0.5],
            n_values: vec![100, 200],
            d,
            p: default_p(d, regime),
            trials: 10,
            regime,
            base_seed: 0,
            max_iters: 500,
        }
    }

    /// The full published grid: kappa 0..0.6 step 0.05, n 100..1000 step 100,
    /// 20 trials per cell.
    pub fn full_grid(d: usize, regime: Regime) -> Self {
        Self {
            kappa_values: (0..=12).map(|k| k as f64 * 0.05).collect(),
            n_values: (1..=10).map(|k| k * 100).collect(),
            d,
            p: default_p(d, regime),
            trials: 20,
            regime,
            base_seed: 0,
            max_iters: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_values.is_empty() || self.n_values.is_empty() {
            bail!("grid needs at least one kappa and one n");
        }
        if self.kappa_values.iter().any(|k| k.is_nan() || *k < 0.0) {
            bail!("kappa values must be >= 0");
        }
        if self.trials == 0 {
            bail!("trials must be >= 1");
        }
        if self.d == 0 || self.p < self.d {
            bail!("need d >= 1 and p >= d (d = {}, p = {})", self.d, self.p);
        }
        if self.n_values.iter().any(|n| *n < 2) {
            bail!("n values must be >= 2");
        }
        Ok(())
    }
}

pub fn default_p(d: usize, regime: Regime) -> usize {
    match regime {
        Regime::SdpCandidate => d,
        Regime::BurerMonteiro => 2 * d,
    }
}

/// Aggregated outcome of one grid cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub kappa: f64,
    pub n: usize,
    pub successes: usize,
    pub trials: usize,
    /// Trials that exhausted max_iters without certifying (counted as
    /// failures, reported separately).
    pub timeouts: usize,
    pub mean_iterations: f64,
    pub mean_seconds: f64,
}

impl CellResult {
    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Runs every cell of the grid, in row-major (kappa outer, n inner) order.
/// `threads = 0` uses the global pool default.
pub fn run_phase_transition(grid: &ExperimentGrid, threads: usize) -> Result<Vec<CellResult>> {
    grid.validate()?;
    let cells: Vec<(usize, f64, usize)> = grid
        .kappa_values
        .iter()
        .enumerate()
        .flat_map(|(ki, kappa)| grid.n_values.iter().map(move |n| (ki, *kappa, *n)))
        .collect();

    let run_all = || -> Result<Vec<CellResult>> {
        cells
            .par_iter()
            .map(|(ki, kappa, n)| run_cell(grid, *ki, *kappa, *n))
            .collect()
    };

    if threads == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building thread pool")?;
        pool.install(run_all)
    }
}

fn run_cell(grid: &ExperimentGrid, kappa_index: usize, kappa: f64, n: usize) -> Result<CellResult> {
    let sigma = kappa_to_sigma(kappa, n, grid.d);
    let mut successes = 0usize;
    let mut timeouts = 0usize;
    let mut iteration_sum = 0usize;
    let mut seconds_sum = 0.0f64;
    for trial in 0..grid.trials {
        let instance_seed = stream_seed(&[
            grid.base_seed,
            n as u64,
            grid.d as u64,
            kappa_index as u64,
            trial as u64,
        ]);
        let started = Instant::now();
        let problem = SyncProblem::generate_gaussian(n, grid.d, sigma, instance_seed)?;
        let mut config = SolverConfig::new(grid.p);
        config.max_iters = grid.max_iters;
        config.init = match grid.regime {
            Regime::SdpCandidate => Init::GroundTruth,
            Regime::BurerMonteiro => Init::Random(stream_seed(&[instance_seed, 0x696e_6974])),
        };
        let (s, trace) = solve(&problem, &config)?;
        let cert = certify(&problem, &s, config.tolerances())?;
        let success = cert.verdict == Verdict::CertifiedUniqueRankD;
        if success {
            successes += 1;
        } else if trace.termination == Termination::MaxIters {
            timeouts += 1;
        }
        iteration_sum += trace.iterations;
        seconds_sum += started.elapsed().as_secs_f64();
    }
    Ok(CellResult {
        kappa,
        n,
        successes,
        trials: grid.trials,
        timeouts,
        mean_iterations: iteration_sum as f64 / grid.trials as f64,
        mean_seconds: seconds_sum / grid.trials as f64,
    })
}
