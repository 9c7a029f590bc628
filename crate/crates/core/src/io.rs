//! File formats: block-indexed CSV for matrices and tuples, JSON sidecar for
//! instance metadata. Debugging surfaces, not performance paths.
//!
//! Block matrix layout (`header i,j,k,l,value`): block row i, block column j,
//! entry (k, l) inside the d×d block. Every entry is written; floats use
//! Rust's shortest round-trip decimal formatting, so read(write(m)) == m
//! bitwise.
//!
//! Stiefel tuple layout (`header i,k,l,value`): block i, entry (k, l) inside
//! the d×p block.
//!
//! A problem is stored as three files sharing a prefix: `<prefix>.data.csv`
//! (the observed matrix A), `<prefix>.meta.json` (n, d, sigma, seed,
//! noise_kind), and `<prefix>.truth.csv` (ground truth, when known).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blockmat::BlockMatrix;
use crate::manifold::StiefelTuple;
use crate::model::{NoiseKind, SyncProblem};
use crate::{Error, Result};

/// Metadata sidecar of a stored problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub seed: u64,
    pub noise_kind: NoiseKind,
    pub has_ground_truth: bool,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl ToString) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Writes a block matrix in the `i,j,k,l,value` layout.
pub fn write_block_matrix_csv(path: &Path, m: &BlockMatrix) -> Result<()> {
    let mut out = String::from("i,j,k,l,value\n");
    let d = m.d();
    for i in 0..m.n() {
        for j in 0..m.n() {
            for k in 0..d {
                for l in 0..d {
                    let v = m.dense()[(i * d + k, j * d + l)];
                    out.push_str(&format!("{i},{j},{k},{l},{v}\n"));
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a block matrix written by [`write_block_matrix_csv`].
pub fn read_block_matrix_csv(path: &Path) -> Result<BlockMatrix> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut entries = Vec::new();
    let (mut n, mut d) = (0usize, 0usize);
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "i,j,k,l,value" {
                return Err(parse_err(path, format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                path,
                format!("line {}: want 5 fields", lineno + 1),
            ));
        }
        let idx: std::result::Result<Vec<usize>, _> = fields[..4]
            .iter()
            .map(|f| f.trim().parse::<usize>())
            .collect();
        let idx = idx.map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        let value: f64 = fields[4]
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        n = n.max(idx[0] + 1).max(idx[1] + 1);
        d = d.max(idx[2] + 1).max(idx[3] + 1);
        entries.push((idx[0], idx[1], idx[2], idx[3], value));
    }
    if n == 0 || d == 0 {
        return Err(parse_err(path, "no entries"));
    }
    if entries.len() != n * n * d * d {
        return Err(parse_err(
            path,
            format!(
                "want {} entries for n={n}, d={d}, got {}",
                n * n * d * d,
                entries.len()
            ),
        ));
    }
    let mut dense = DMatrix::zeros(n * d, n * d);
    for (i, j, k, l, v) in entries {
        dense[(i * d + k, j * d + l)] = v;
    }
    BlockMatrix::from_dense(n, d, dense)
}

/// Writes a Stiefel tuple in the `i,k,l,value` layout.
pub fn write_stiefel_csv(path: &Path, s: &StiefelTuple) -> Result<()> {
    let mut out = String::from("i,k,l,value\n");
    let d = s.d();
    for i in 0..s.n() {
        for k in 0..d {
            for l in 0..s.p() {
                let v = s.stacked()[(i * d + k, l)];
                out.push_str(&format!("{i},{k},{l},{v}\n"));
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a Stiefel tuple written by [`write_stiefel_csv`].
pub fn read_stiefel_csv(path: &Path) -> Result<StiefelTuple> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut entries = Vec::new();
    let (mut n, mut d, mut p) = (0usize, 0usize, 0usize);
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "i,k,l,value" {
                return Err(parse_err(path, format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                format!("line {}: want 4 fields", lineno + 1),
            ));
        }
        let idx: std::result::Result<Vec<usize>, _> = fields[..3]
            .iter()
            .map(|f| f.trim().parse::<usize>())
            .collect();
        let idx = idx.map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        let value: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        n = n.max(idx[0] + 1);
        d = d.max(idx[1] + 1);
        p = p.max(idx[2] + 1);
        entries.push((idx[0], idx[1], idx[2], value));
    }
    if entries.is_empty() {
        return Err(parse_err(path, "no entries"));
    }
    if entries.len() != n * d * p {
        return Err(parse_err(
            path,
            format!(
                "want {} entries for n={n}, d={d}, p={p}, got {}",
                n * d * p,
                entries.len()
            ),
        ));
    }
    let mut stacked = DMatrix::zeros(n * d, p);
    for (i, k, l, v) in entries {
        stacked[(i * d + k, l)] = v;
    }
    StiefelTuple::from_stacked(n, d, p, stacked)
}

/// Paths of a stored problem for a given prefix.
pub fn problem_paths(prefix: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let with_ext = |ext: &str| {
        let mut os = prefix.as_os_str().to_owned();
        os.push(ext);
        PathBuf::from(os)
    };
    (
        with_ext(".data.csv"),
        with_ext(".meta.json"),
        with_ext(".truth.csv"),
    )
}

/// Stores a problem under `<prefix>.data.csv` / `.meta.json` / `.truth.csv`.
pub fn write_problem(prefix: &Path, problem: &SyncProblem) -> Result<()> {
    let (data_path, meta_path, truth_path) = problem_paths(prefix);
    write_block_matrix_csv(&data_path, problem.data())?;
    let meta = ProblemMeta {
        n: problem.n(),
        d: problem.d(),
        sigma: problem.sigma(),
        seed: problem.seed(),
        noise_kind: problem.noise_kind(),
        has_ground_truth: problem.ground_truth().is_some(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| parse_err(&meta_path, e))?;
    let mut f = fs::File::create(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    writeln!(f, "{json}").map_err(|e| io_err(&meta_path, e))?;
    if let Some(g) = problem.ground_truth() {
        write_stiefel_csv(&truth_path, g)?;
    }
    Ok(())
}

/// Loads a problem stored by [`write_problem`].
pub fn read_problem(prefix: &Path) -> Result<SyncProblem> {
    let (data_path, meta_path, truth_path) = problem_paths(prefix);
    let a = read_block_matrix_csv(&data_path)?;
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta: ProblemMeta =
        serde_json::from_str(&meta_text).map_err(|e| parse_err(&meta_path, e))?;
    if meta.n != a.n() || meta.d != a.d() {
        return Err(parse_err(
            &meta_path,
            format!(
                "metadata says n={}, d={} but data is n={}, d={}",
                meta.n,
                meta.d,
                a.n(),
                a.d()
            ),
        ));
    }
    let ground_truth = if meta.has_ground_truth {
        Some(read_stiefel_csv(&truth_path)?)
    } else {
        None
    };
    SyncProblem::from_parts(a, meta.sigma, ground_truth, meta.seed, meta.noise_kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SyncProblem;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("orthosync-io-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn block_matrix_roundtrip_is_bitexact() {
        let dir = tmpdir("bm");
        let problem = SyncProblem::generate_gaussian(4, 3, 0.9, 7).unwrap();
        let path = dir.join("a.csv");
        write_block_matrix_csv(&path, problem.data()).unwrap();
        let back = read_block_matrix_csv(&path).unwrap();
        assert_eq!(back.dense(), problem.data().dense());
    }

    #[test]
    fn stiefel_roundtrip_is_bitexact() {
        let dir = tmpdir("st");
        let s = crate::manifold::random_stiefel(5, 2, 4, 3).unwrap();
        let path = dir.join("s.csv");
        write_stiefel_csv(&path, &s).unwrap();
        let back = read_stiefel_csv(&path).unwrap();
        assert_eq!(back.stacked(), s.stacked());
    }

    #[test]
    fn problem_roundtrip_preserves_everything() {
        let dir = tmpdir("prob");
        let problem = SyncProblem::generate_gaussian(5, 2, 1.1, 13).unwrap();
        let prefix = dir.join("instance");
        write_problem(&prefix, &problem).unwrap();
        let back = read_problem(&prefix).unwrap();
        assert_eq!(back.n(), problem.n());
        assert_eq!(back.d(), problem.d());
        assert_eq!(back.sigma(), problem.sigma());
        assert_eq!(back.seed(), problem.seed());
        assert_eq!(back.noise_kind(), problem.noise_kind());
        assert_eq!(back.data().dense(), problem.data().dense());
        assert_eq!(
            back.ground_truth().unwrap().stacked(),
            problem.ground_truth().unwrap().stacked()
        );
    }

    #[test]
    fn reader_rejects_malformed_input() {
        let dir = tmpdir("bad");
        let path = dir.join("bad.csv");
        fs::write(&path, "i,j,k,l,value\n0,0,0,0,1\n0,0,0\n").unwrap();
        assert!(matches!(
            read_block_matrix_csv(&path),
            Err(Error::Parse { .. })
        ));
        let missing = dir.join("missing.csv");
        assert!(matches!(
            read_block_matrix_csv(&missing),
            Err(Error::Io { .. })
        ));
    }
}
