//! CSV and PGM artifacts of a phase-transition run.
//!
//! `results.csv` holds one row per cell:
//! `kappa,n,successes,trials,mean_iters,mean_seconds`, in kappa-major grid
//! order. All columns except `mean_seconds` are deterministic for a fixed
//! grid and base seed.
//!
//! The heatmap CSV is a kappa x n matrix of success fractions: header
//! `kappa,<n1>,<n2>,...`, one row per kappa ascending. The optional PGM is
//! plain text P2, width = #n, height = #kappa, rows ordered kappa descending,
//! gray level = round(fraction * 255).

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::grid::CellResult;

/// Writes the per-cell results table.
pub fn write_results_csv(path: &Path, results: &[CellResult]) -> Result<()> {
    let mut out = String::from("kappa,n,successes,trials,mean_iters,mean_seconds\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6}\n",
            r.kappa, r.n, r.successes, r.trials, r.mean_iterations, r.mean_seconds
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Success fractions arranged on the (kappa, n) lattice.
struct Lattice {
    kappas: Vec<f64>,
    ns: Vec<usize>,
    /// Row-major, kappa ascending, n ascending.
    fractions: Vec<f64>,
}

fn lattice_of(results: &[CellResult]) -> Result<Lattice> {
    if results.is_empty() {
        bail!("no results to lay out");
    }
    let mut kappas: Vec<f64> = results.iter().map(|r| r.kappa).collect();
    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    kappas.dedup();
    let mut ns: Vec<usize> = results.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if kappas.len() * ns.len() != results.len() {
        bail!(
            "results do not form a complete {}x{} lattice ({} cells)",
            kappas.len(),
            ns.len(),
            results.len()
        );
    }
    let mut fractions = vec![f64::NAN; kappas.len() * ns.len()];
    for r in results {
        let ki = kappas.iter().position(|k| *k == r.kappa).unwrap();
        let ni = ns.iter().position(|n| *n == r.n).unwrap();
        fractions[ki * ns.len() + ni] = r.success_fraction();
    }
    Ok(Lattice {
        kappas,
        ns,
        fractions,
    })
}

/// Writes the success-fraction matrix CSV and, when asked, the grayscale PGM.
pub fn emit_heatmap(
    results: &[CellResult],
    csv_path: &Path,
    pgm_path: Option<&Path>,
) -> Result<()> {
    let lattice = lattice_of(results)?;
    let mut out = String::from("kappa");
    for n in &lattice.ns {
        out.push_str(&format!(",{n}"));
    }
    out.push('\n');
    for (ki, kappa) in lattice.kappas.iter().enumerate() {
        out.push_str(&format!("{kappa}"));
        for ni in 0..lattice.ns.len() {
            out.push_str(&format!(
                ",{}",
                lattice.fractions[ki * lattice.ns.len() + ni]
            ));
        }
        out.push('\n');
    }
    fs::write(csv_path, out).with_context(|| format!("writing {}", csv_path.display()))?;

    if let Some(pgm_path) = pgm_path {
        let mut pgm = format!("P2\n{} {}\n255\n", lattice.ns.len(), lattice.kappas.len());
        for ki in (0..lattice.kappas.len()).rev() {
            let row: Vec<String> = (0..lattice.ns.len())
                .map(|ni| {
                    let level = (lattice.fractions[ki * lattice.ns.len() + ni] * 255.0).round();
                    format!("{}", level as u8)
                })
                .collect();
            pgm.push_str(&row.join(" "));
            pgm.push('\n');
        }
        fs::write(pgm_path, pgm).with_context(|| format!("writing {}", pgm_path.display()))?;
    }
    Ok(())
}
