//! Command-line front end: instance generation, solving, certification,
//! landscape checks, and the phase-transition experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use orthosync::certify::{bound_bm, bound_cvx, certify, BoundReport, Tolerances};
use orthosync::io;
use orthosync::landscape::{bm_inequality_audit, sample_socp_test};
use orthosync::manifold::distance_to_sync;
use orthosync::model::kappa_to_sigma;
use orthosync::solver::{solve, Init, SolverConfig, Termination};
use orthosync::{Error, SyncProblem, Verdict};
use orthosync_cli::{
    emit_heatmap, run_phase_transition, write_results_csv, ExperimentGrid, Regime,
};

#[derive(Parser)]
#[command(
    name = "orthosync",
    about = "Orthogonal group synchronization: projected power method, dual certificates, phase transitions",
    version
)]
struct Cli {
    /// Base seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the experiment harness (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian instance and store it as CSV + JSON sidecar.
    Generate(GenerateArgs),
    /// Run the projected power method on a generated or stored instance.
    Solve(SolveArgs),
    /// Certify a stored candidate against a stored instance.
    Certify(CertifyArgs),
    /// Riemannian landscape diagnostics at a stored candidate.
    LandscapeCheck(LandscapeArgs),
    /// Sweep a (kappa, n) grid and record certification rates.
    PhaseTransition(PhaseArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Raw noise level; exclusive with --kappa.
    #[arg(long, conflicts_with = "kappa")]
    sigma: Option<f64>,
    /// Noise scale kappa, applied as sigma = kappa sqrt(n/d).
    #[arg(long)]
    kappa: Option<f64>,
}

impl InstanceArgs {
    fn build(&self, seed: u64) -> Result<SyncProblem> {
        let (Some(n), Some(d)) = (self.n, self.d) else {
            bail!("--n and --d are required unless --problem is given");
        };
        let sigma = match (self.sigma, self.kappa) {
            (Some(s), _) => s,
            (None, Some(k)) => kappa_to_sigma(k, n, d),
            (None, None) => 0.0,
        };
        Ok(SyncProblem::generate_gaussian(n, d, sigma, seed)?)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// File prefix of the stored problem (under --out-dir).
    #[arg(long, default_value = "instance")]
    name: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Load the problem from this prefix instead of generating one.
    #[arg(long, conflicts_with_all = ["n", "d", "sigma", "kappa"])]
    problem: Option<PathBuf>,
    /// Factorization width (defaults to d).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum, default_value_t = InitKind::GroundTruth)]
    init: InitKind,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
    /// Write the iteration trace (iter, objective, residual) to this file.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the final iterate to this file.
    #[arg(long)]
    solution_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    GroundTruth,
    Random,
}

#[derive(Args)]
struct CertifyArgs {
    /// Prefix of the stored problem.
    #[arg(long)]
    problem: PathBuf,
    /// Candidate tuple CSV.
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
}

#[derive(Args)]
struct LandscapeArgs {
    /// Prefix of the stored problem.
    #[arg(long)]
    problem: PathBuf,
    /// Candidate tuple CSV.
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long, default_value_t = 100)]
    directions: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeKind {
    /// p = d, ground-truth initialization.
    Sdp,
    /// p > d (default 2d), random initialization.
    Bm,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Factorization width (defaults to d for --regime sdp, 2d for bm).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum, default_value_t = RegimeKind::Sdp)]
    regime: RegimeKind,
    /// Comma-separated kappa values (defaults to the CI grid).
    #[arg(long, value_delimiter = ',')]
    kappas: Option<Vec<f64>>,
    /// Comma-separated n values (defaults to the CI grid).
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Use the full published grid (kappa 0..0.6 step 0.05, n 100..1000,
    /// 20 trials); overrides --kappas/--ns/--trials.
    #[arg(long)]
    full_grid: bool,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Also emit a plain-text PGM heatmap.
    #[arg(long)]
    pgm: bool,
}

#[derive(Serialize)]
struct SolveRecord {
    n: usize,
    d: usize,
    p: usize,
    sigma: f64,
    seed: u64,
    init: &'static str,
    iterations: usize,
    termination: String,
    objective: f64,
    residual: f64,
    gap: Option<f64>,
    verdict: String,
    distance_to_ground_truth: Option<f64>,
}

#[derive(Serialize)]
struct BoundRecord {
    delta: f64,
    gamma: Option<f64>,
    curvature_term: f64,
    cross_term: f64,
    row_signal_term: f64,
    noise_norm: f64,
    rhs: f64,
    margin: f64,
    satisfied: bool,
}

impl From<&BoundReport> for BoundRecord {
    fn from(r: &BoundReport) -> Self {
        BoundRecord {
            delta: r.delta,
            gamma: r.gamma,
            curvature_term: r.curvature_term,
            cross_term: r.cross_term,
            row_signal_term: r.row_signal_term,
            noise_norm: r.noise_norm,
            rhs: r.rhs(),
            margin: r.margin,
            satisfied: r.satisfied,
        }
    }
}

#[derive(Serialize)]
struct CertifyRecord {
    verdict: String,
    residual: f64,
    gap: f64,
    low_spectrum: Vec<f64>,
    convex_bound: Option<BoundRecord>,
    low_rank_bound: Option<BoundRecord>,
    low_rank_bound_note: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    match &cli.command {
        Command::Generate(args) => {
            let problem = args.instance.build(cli.seed)?;
            let prefix = cli.out_dir.join(&args.name);
            io::write_problem(&prefix, &problem)?;
            println!(
                "wrote {}.data.csv / .meta.json / .truth.csv (n={}, d={}, sigma={})",
                prefix.display(),
                problem.n(),
                problem.d(),
                problem.sigma()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => cmd_solve(&cli, args),
        Command::Certify(args) => cmd_certify(args),
        Command::LandscapeCheck(args) => cmd_landscape(args),
        Command::PhaseTransition(args) => cmd_phase(&cli, args),
    }
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> Result<ExitCode> {
    let problem = match &args.problem {
        Some(prefix) => io::read_problem(prefix)?,
        None => args.instance.build(cli.seed)?,
    };
    let p = args.p.unwrap_or(problem.d());
    let mut config = SolverConfig::new(p);
    config.max_iters = args.max_iters;
    config.residual_tol = args.residual_tol;
    config.gap_tol = args.gap_tol;
    let (init, init_name) = match args.init {
        InitKind::GroundTruth => (Init::GroundTruth, "ground-truth"),
        InitKind::Random => (Init::Random(cli.seed), "random"),
    };
    config.init = init;

    let (s, trace) = solve(&problem, &config)?;
    let cert = certify(&problem, &s, config.tolerances())?;
    let distance = problem
        .ground_truth()
        .and_then(|g| distance_to_sync(&s, g).ok());

    if let Some(path) = &args.trace_out {
        let mut out = String::from("iter,objective,residual\n");
        for (i, (obj, res)) in trace.objectives.iter().zip(&trace.residuals).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, obj, res));
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.solution_out {
        io::write_stiefel_csv(path, &s)?;
    }

    let record = SolveRecord {
        n: problem.n(),
        d: problem.d(),
        p,
        sigma: problem.sigma(),
        seed: problem.seed(),
        init: init_name,
        iterations: trace.iterations,
        termination: termination_name(trace.termination).to_string(),
        objective: problem.objective(&s)?,
        residual: cert.residual,
        gap: Some(cert.gap()),
        verdict: verdict_name(cert.verdict).to_string(),
        distance_to_ground_truth: distance,
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(args: &CertifyArgs) -> Result<ExitCode> {
    let problem = io::read_problem(&args.problem)?;
    let candidate = io::read_stiefel_csv(&args.candidate)?;
    let tolerances = Tolerances {
        residual_tol: args.residual_tol,
        gap_tol: args.gap_tol,
    };
    let cert = certify(&problem, &candidate, tolerances)?;

    let (convex_bound, low_rank_bound, note) = match (problem.delta(), problem.ground_truth()) {
        (Some(delta), Some(g)) => {
            let cvx = bound_cvx(&delta, g)?;
            match bound_bm(&delta, g, candidate.p()) {
                Ok(bm) => (
                    Some(BoundRecord::from(&cvx)),
                    Some(BoundRecord::from(&bm)),
                    None,
                ),
                Err(Error::BoundNotApplicable { p, two_d }) => (
                    Some(BoundRecord::from(&cvx)),
                    None,
                    Some(format!("not applicable: p = {p} <= 2d = {two_d}")),
                ),
                Err(e) => return Err(e.into()),
            }
        }
        _ => (
            None,
            None,
            Some("no ground truth stored; bounds skipped".into()),
        ),
    };

    let record = CertifyRecord {
        verdict: verdict_name(cert.verdict).to_string(),
        residual: cert.residual,
        gap: cert.gap(),
        low_spectrum: cert.low_spectrum.clone(),
        convex_bound,
        low_rank_bound,
        low_rank_bound_note: note,
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(if cert.is_certified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_landscape(args: &LandscapeArgs) -> Result<ExitCode> {
    let problem = io::read_problem(&args.problem)?;
    let candidate = io::read_stiefel_csv(&args.candidate)?;
    let report = sample_socp_test(&problem, &candidate, args.directions, problem.seed())?;

    #[derive(Serialize)]
    struct LandscapeRecord {
        grad_norm: f64,
        min_quadform: f64,
        max_quadform: f64,
        num_directions: usize,
        lambda_min_floor: f64,
        is_socp_numerically: bool,
        second_order_margin: Option<f64>,
        first_order_margin: Option<f64>,
        distance: Option<f64>,
        proximity_bound: Option<f64>,
        audit_note: Option<String>,
    }

    let mut record = LandscapeRecord {
        grad_norm: report.grad_norm,
        min_quadform: report.min_quadform,
        max_quadform: report.max_quadform,
        num_directions: report.num_directions,
        lambda_min_floor: report
            .lambda_min_blocks
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min),
        is_socp_numerically: report.is_socp_numerically,
        second_order_margin: None,
        first_order_margin: None,
        distance: None,
        proximity_bound: None,
        audit_note: None,
    };
    match bm_inequality_audit(&problem, &candidate) {
        Ok(audit) => {
            record.second_order_margin = Some(audit.second_order_margin);
            record.first_order_margin = Some(audit.first_order_margin);
            record.distance = Some(audit.distance);
            record.proximity_bound = audit.proximity_bound;
        }
        Err(Error::NotCritical { residual, tol }) => {
            record.audit_note = Some(format!(
                "audit skipped: residual {residual:.3e} above {tol:.0e}"
            ));
        }
        Err(e) => return Err(e.into()),
    }
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_phase(cli: &Cli, args: &PhaseArgs) -> Result<ExitCode> {
    let regime = match args.regime {
        RegimeKind::Sdp => Regime::SdpCandidate,
        RegimeKind::Bm => Regime::BurerMonteiro,
    };
    let mut grid = if args.full_grid {
        ExperimentGrid::full_grid(args.d, regime)
    } else {
        ExperimentGrid::ci_default(args.d, regime)
    };
    if !args.full_grid {
        if let Some(kappas) = &args.kappas {
            grid.kappa_values = kappas.clone();
        }
        if let Some(ns) = &args.ns {
            grid.n_values = ns.clone();
        }
        if let Some(trials) = args.trials {
            grid.trials = trials;
        }
    }
    if let Some(p) = args.p {
        if p < args.d {
            bail!("p = {p} must be >= d = {}", args.d);
        }
        grid.p = p;
    }
    grid.base_seed = cli.seed;
    grid.max_iters = args.max_iters;

    let results = run_phase_transition(&grid, cli.threads)?;
    let results_path = cli.out_dir.join("results.csv");
    let heatmap_path = cli.out_dir.join("heatmap.csv");
    let pgm_path = cli.out_dir.join("heatmap.pgm");
    write_results_csv(&results_path, &results)?;
    emit_heatmap(
        &results,
        &heatmap_path,
        args.pgm.then_some(pgm_path.as_path()),
    )?;

    println!("kappa      n  success  timeouts  mean_iters  mean_secs");
    for r in &results {
        println!(
            "{:<8} {:>4}  {:>2}/{:<4} {:>8}  {:>10.2}  {:>9.3}",
            r.kappa, r.n, r.successes, r.trials, r.timeouts, r.mean_iterations, r.mean_seconds
        );
    }
    println!("wrote {}", results_path.display());
    println!("wrote {}", heatmap_path.display());
    if args.pgm {
        println!("wrote {}", pgm_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::CertifiedUniqueRankD => "certified-unique-rank-d",
        Verdict::FirstOrderOnly => "first-order-only",
        Verdict::Failed => "failed",
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::CertifiedStop => "certified-stop",
        Termination::FixedPoint => "fixed-point",
        Termination::MaxIters => "max-iters",
        Termination::AbortedRankDeficient => "aborted-rank-deficient",
    }
}
