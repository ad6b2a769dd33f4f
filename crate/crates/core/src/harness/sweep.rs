//! Concurrent execution of a sweep's run matrix.

use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SweepRow, SweepSpec};
use super::doc::write_document;
use super::run_config;
use crate::error::{Error, Result};
use crate::verifier::check_stability;

/// Column order of the summary CSV.
pub const SUMMARY_HEADER: [&str; 11] = [
    "n",
    "q",
    "eps",
    "mode",
    "converged",
    "h_minus_one_sup",
    "max_min_h",
    "ratio",
    "delta2",
    "stability_bound",
    "stability_pass",
];

/// One line of the summary CSV. Fields that could not be computed are NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub q: f64,
    pub eps: f64,
    pub mode: String,
    pub converged: bool,
    pub h_minus_one_sup: f64,
    pub max_min_h: f64,
    pub ratio: f64,
    pub delta2: f64,
    pub stability_bound: f64,
    pub stability_pass: bool,
}

pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub run_files: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

fn run_row(row: &SweepRow, runs_dir: &Path) -> (SummaryRow, Option<PathBuf>) {
    let mut summary = SummaryRow {
        n: row.config.dim,
        q: row.q,
        eps: row.eps,
        mode: row.mode.to_string(),
        converged: false,
        h_minus_one_sup: f64::NAN,
        max_min_h: f64::NAN,
        ratio: f64::NAN,
        delta2: f64::NAN,
        stability_bound: f64::NAN,
        stability_pass: false,
    };
    let mut attempt = || -> Result<PathBuf> {
        let doc = run_config(&row.config)?;
        let path = runs_dir.join(format!("row_{:04}.toml", row.index));
        write_document(&path, &doc)?;
        summary.converged = doc.status.converged;
        summary.h_minus_one_sup = doc.status.h_minus_one_sup;
        summary.max_min_h = doc.status.max_min_h;
        if doc.status.converged {
            let s = check_stability(&doc.support()?, row.q)?;
            summary.ratio = s.ratio;
            summary.delta2 = s.delta2;
            summary.stability_bound = s.bound;
            summary.stability_pass = s.pass;
        }
        Ok(path)
    };
    match attempt() {
        Ok(p) => (summary, Some(p)),
        Err(e) => {
            warn!("sweep row {} failed: {e}", row.index);
            (summary, None)
        }
    }
}

/// Runs every row on a pool of `spec.workers` threads, then writes
/// `summary.csv` into `out_dir`. Row failures are recorded, not propagated.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<SweepOutcome> {
    let rows = spec.run_matrix()?;
    let runs_dir = out_dir.join("runs");
    std::fs::create_dir_all(&runs_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let results: Vec<(SummaryRow, Option<PathBuf>)> =
        pool.install(|| rows.par_iter().map(|r| run_row(r, &runs_dir)).collect());
    let summary_path = out_dir.join("summary.csv");
    write_summary(&summary_path, results.iter().map(|r| &r.0))?;
    let (rows, files): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(SweepOutcome {
        rows,
        run_files: files.into_iter().flatten().collect(),
        summary_path,
    })
}

pub fn write_summary<'a>(path: &Path, rows: impl IntoIterator<Item = &'a SummaryRow>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != SUMMARY_HEADER {
        return Err(Error::Parse(format!("unexpected summary header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{Mode, ModeSpec};
    use crate::solver::SolverConfig;
    use crate::sphere::Resolution;

    fn spec() -> SweepSpec {
        SweepSpec {
            dim: 1,
            resolution: Resolution::Circle { n: 64 },
            q: vec![0.5, 1.0],
            eps: vec![0.01, 0.05],
            modes: vec![ModeSpec(Mode::Cos(2))],
            repetitions: 1,
            seed: 1,
            max_runs: 100,
            workers: 3,
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn four_row_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_sweep(&spec(), dir.path()).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert!(out.rows.iter().all(|r| r.converged && r.stability_pass), "{:?}", out.rows);
        assert_eq!(out.run_files.len(), 4);
        let back = read_summary(&out.summary_path).unwrap();
        assert_eq!(back, out.rows);
        let text = std::fs::read_to_string(&out.summary_path).unwrap();
        assert!(text.starts_with(&SUMMARY_HEADER.join(",")));
        // row order follows the matrix, not completion order
        assert_eq!((back[0].q, back[0].eps), (0.5, 0.01));
        assert_eq!((back[3].q, back[3].eps), (1.0, 0.05));
    }

    #[test]
    fn failing_rows_are_recorded() {
        let mut s = spec();
        s.q = vec![1.0];
        s.eps = vec![0.05, 2.0];
        let dir = tempfile::tempdir().unwrap();
        let out = run_sweep(&s, dir.path()).unwrap();
        assert!(out.rows[0].converged);
        assert!(!out.rows[1].converged && out.rows[1].delta2.is_nan());
        assert_eq!(out.run_files.len(), 1);
    }

    #[test]
    fn rejected_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec();
        s.max_runs = 3;
        assert!(run_sweep(&s, dir.path()).is_err());
        assert!(!dir.path().join("runs").exists());
    }
}
