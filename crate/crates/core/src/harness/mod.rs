//! Configuration, result persistence and the command implementations behind
//! the `dualmink` binary.
//!
//! Exit-code contract of every command: [`EXIT_OK`] when the run converged
//! and every checked property held, [`EXIT_FAILED`] when the run completed
//! but did not converge or a check failed, [`EXIT_INPUT`] for unreadable or
//! invalid input and refused preconditions.

pub mod config;
pub mod doc;
pub mod plot;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::{radial_support_roundtrip, AnalyticBody, SupportFunction};
use crate::error::{Error, Result};
use crate::solver::{solve_homotopy, Failure, HomotopyStep, NewtonIterate, SolveResult};
use crate::sphere::{Resolution, SphereGrid};
use crate::verifier::{
    c0_c1_report, check_poincare, check_gradient_inequality, check_spectral_inequality, check_stability,
    check_x_alpha_inequality, dual_density, random_test_function, BoundsReport, InequalityCheck,
    StabilityReport,
};

pub use config::{RhsSpec, RunConfig, SweepRow, SweepSpec};
pub use doc::{from_document, read_document, strip_timing, to_document, write_document};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Size and polynomial degree of the random test-function battery.
pub const BATTERY_TRIALS: usize = 100;
pub const BATTERY_DEGREE: u32 = 4;

/// A support function on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyRecord {
    pub dim: usize,
    pub resolution: Resolution,
    pub even: bool,
    pub values: Vec<f64>,
}

impl BodyRecord {
    pub fn from_support(h: &SupportFunction) -> Self {
        Self {
            dim: h.dim(),
            resolution: h.grid().resolution(),
            even: h.is_even(),
            values: h.values().to_vec(),
        }
    }

    pub fn to_support(&self) -> Result<SupportFunction> {
        let grid = Arc::new(SphereGrid::with_dim(self.dim, &Vec::from(self.resolution))?);
        let h = SupportFunction::new(grid, self.values.clone())?;
        if self.even && !h.is_even() {
            return Err(Error::NotEven);
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// `‖h - 1‖_∞`.
    pub h_minus_one_sup: f64,
    /// `max h / min h`.
    pub max_min_h: f64,
    /// `‖h - h_exact‖_∞` for manufactured densities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_error: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_seconds: f64,
}

/// Everything produced by one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config: RunConfig,
    pub status: RunStatus,
    pub solution: BodyRecord,
    /// The sampled right-hand side.
    pub rhs: Vec<f64>,
    pub newton_log: Vec<NewtonIterate>,
    pub homotopy: Vec<HomotopyStep>,
    pub timing: Timing,
}

impl ResultDocument {
    fn from_solve(config: &RunConfig, grid: &Arc<SphereGrid>, rhs: Vec<f64>, r: SolveResult) -> Result<Self> {
        let h_minus_one_sup = r.h.values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        let exact_error = config.f.exact_solution(grid)?.map(|exact| {
            exact
                .iter()
                .zip(r.h.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        });
        Ok(Self {
            config: config.clone(),
            status: RunStatus {
                converged: r.converged,
                failure: r.failure,
                residual_sup: r.residual_sup,
                residual_l2: r.residual_l2,
                h_minus_one_sup,
                max_min_h: r.h.max() / r.h.min(),
                exact_error,
                warnings: r.warnings,
            },
            solution: BodyRecord::from_support(&r.h),
            rhs,
            newton_log: r.newton_log,
            homotopy: r.trace,
            timing: Timing {
                wall_time_seconds: r.wall_time.as_secs_f64(),
            },
        })
    }

    pub fn support(&self) -> Result<SupportFunction> {
        self.solution.to_support()
    }
}

/// Runs the homotopy solver for a configuration.
pub fn run_config(config: &RunConfig) -> Result<ResultDocument> {
    config.validate()?;
    let grid = Arc::new(SphereGrid::build(config.resolution)?);
    let rhs = config.f.sample(&grid, config.q)?;
    let result = solve_homotopy(&grid, &rhs, config.q, &config.solver)?;
    info!(
        "solved n={} {} q={} f={}: converged={} residual={:.3e}",
        config.dim, config.resolution, config.q, config.f, result.converged, result.residual_sup
    );
    ResultDocument::from_solve(config, &grid, rhs, result)
}

/// Result of a command: exit code plus the files written.
#[derive(Clone, Debug, PartialEq)]
pub struct CmdOutcome {
    pub exit_code: i32,
    pub written: Vec<PathBuf>,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub override_q_range: bool,
}

pub fn cmd_solve(config_path: &Path, opts: &SolveOptions) -> Result<CmdOutcome> {
    let mut config: RunConfig = read_document(config_path)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if opts.override_q_range {
        config.solver.override_q_range = true;
    }
    let out = match (&opts.out, &config.output_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join("result.toml"),
        (None, None) => PathBuf::from("result.toml"),
    };
    let doc = run_config(&config)?;
    write_document(&out, &doc)?;
    let converged = doc.status.converged;
    Ok(CmdOutcome {
        exit_code: if converged { EXIT_OK } else { EXIT_FAILED },
        message: format!(
            "converged={converged} residual={:.3e} ‖h-1‖∞={:.3e}",
            doc.status.residual_sup, doc.status.h_minus_one_sup
        ),
        written: vec![out],
    })
}

/// Outcome of a seeded random battery of one inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub trials: usize,
    pub passed: usize,
    /// The trial with the smallest margin `rhs - lhs`.
    pub worst: InequalityCheck,
}

impl Battery {
    pub fn all_pass(&self) -> bool {
        self.passed == self.trials
    }

    fn collect(checks: impl IntoIterator<Item = Result<InequalityCheck>>) -> Result<Self> {
        let mut trials = 0;
        let mut passed = 0;
        let mut worst: Option<InequalityCheck> = None;
        for c in checks {
            let c = c?;
            trials += 1;
            passed += c.pass as usize;
            if worst.as_ref().is_none_or(|w| c.margin() < w.margin()) {
                worst = Some(c);
            }
        }
        let worst = worst.ok_or_else(|| Error::InvalidParameter("empty battery".into()))?;
        Ok(Self {
            trials,
            passed,
            worst,
        })
    }
}

/// `n ∫ f² h σ_n ≤ ∫ h² σ_n b^{ij} f_i f_j` on seeded random polynomials.
pub fn spectral_battery(h: &SupportFunction, seed: u64, trials: usize) -> Result<Battery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tests: Vec<Vec<f64>> = (0..trials)
        .map(|_| random_test_function(h.grid(), &mut rng, BATTERY_DEGREE))
        .collect();
    Battery::collect(tests.iter().map(|f| check_spectral_inequality(h, f)))
}

pub fn poincare_battery(grid: &SphereGrid, seed: u64, trials: usize) -> Result<Battery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let tests: Vec<Vec<f64>> = (0..trials)
        .map(|_| random_test_function(grid, &mut rng, BATTERY_DEGREE + 2))
        .collect();
    Battery::collect(tests.iter().map(|u| check_poincare(grid, u)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundtripRecord {
    pub max: f64,
    pub rms: f64,
}

/// Verification document written by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub source: String,
    pub dim: usize,
    pub q: f64,
    /// Exponent used in the `|X|^{α+2}` inequality, `q - n - 1`.
    pub alpha: f64,
    pub stability: StabilityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<InequalityCheck>,
    pub x_alpha: InequalityCheck,
    pub spectral: Battery,
    pub poincare: Battery,
    pub bounds: BoundsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roundtrip: Option<RoundtripRecord>,
    /// Every check whose hypotheses hold passed.
    pub all_pass: bool,
}

/// Runs the verifier suite on a solved body.
pub fn verify_document(doc: &ResultDocument, source: &str) -> Result<VerifyReport> {
    if !doc.status.converged {
        return Err(Error::InvalidParameter(format!(
            "{source}: result did not converge; refusing to verify"
        )));
    }
    let h = doc.support()?;
    let q = doc.config.q;
    let dim = h.dim();
    let alpha = q - dim as f64 - 1.0;
    let mut stability = check_stability(&h, q)?;
    let gradient = if stability.q_in_estimate_range {
        Some(check_gradient_inequality(&h, q)?)
    } else {
        None
    };
    let x_alpha = check_x_alpha_inequality(&h, alpha)?;
    let spectral = spectral_battery(&h, doc.config.seed, BATTERY_TRIALS)?;
    let poincare = poincare_battery(h.grid(), doc.config.seed, BATTERY_TRIALS)?;
    stability.checks.extend(gradient.iter().cloned());
    stability.checks.push(x_alpha.clone());
    stability.checks.push(spectral.worst.clone());
    stability.checks.push(poincare.worst.clone());
    let roundtrip = radial_support_roundtrip(&h)
        .ok()
        .map(|r| RoundtripRecord { max: r.max, rms: r.rms });
    let all_pass = (stability.pass || !stability.q_in_estimate_range)
        && gradient.as_ref().is_none_or(|c| c.pass)
        && x_alpha.pass
        && spectral.all_pass()
        && poincare.all_pass();
    Ok(VerifyReport {
        source: source.to_string(),
        dim,
        q,
        alpha,
        bounds: c0_c1_report(&h, q)?,
        stability,
        gradient,
        x_alpha,
        spectral,
        poincare,
        roundtrip,
        all_pass,
    })
}

/// Per-node CSV of the solved body and its dual density.
pub fn write_density_csv(path: &Path, doc: &ResultDocument) -> Result<()> {
    let h = doc.support()?;
    let g = dual_density(&h.geometry(), doc.config.q)?.g;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "x", "y", "z", "h", "f", "g"])?;
    for (i, x) in h.grid().nodes().iter().enumerate() {
        let row = [x[0], x[1], x[2], h.values()[i], doc.rhs[i], g[i]];
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| doc::format_float(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_verify(result_path: &Path, out: Option<&Path>) -> Result<CmdOutcome> {
    let doc: ResultDocument = read_document(result_path)?;
    let report = verify_document(&doc, &result_path.display().to_string())?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| result_path.with_extension("verify.toml"));
    write_document(&out, &report)?;
    let csv_path = out.with_extension("density.csv");
    write_density_csv(&csv_path, &doc)?;
    Ok(CmdOutcome {
        exit_code: if report.all_pass { EXIT_OK } else { EXIT_FAILED },
        message: format!(
            "delta2={:.3e} bound={:.3e} stability={} all_pass={}",
            report.stability.delta2, report.stability.bound, report.stability.pass, report.all_pass
        ),
        written: vec![out, csv_path],
    })
}

pub fn cmd_plot(result_path: &Path, out: Option<&Path>) -> Result<CmdOutcome> {
    let doc: ResultDocument = read_document(result_path)?;
    let svg = plot::render(&doc)?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| result_path.with_extension("svg"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&out, svg)?;
    Ok(CmdOutcome {
        exit_code: EXIT_OK,
        message: format!("wrote {}", out.display()),
        written: vec![out],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub override_q_range: bool,
}

pub fn cmd_sweep(spec_path: &Path, opts: &SweepOptions) -> Result<CmdOutcome> {
    let mut spec: SweepSpec = read_document(spec_path)?;
    if let Some(w) = opts.workers {
        spec.workers = w;
    }
    if let Some(s) = opts.seed {
        spec.seed = s;
    }
    if opts.override_q_range {
        spec.solver.override_q_range = true;
    }
    let outcome = sweep::run_sweep(&spec, &opts.out_dir)?;
    let ok = outcome.rows.iter().all(|r| r.converged && r.stability_pass);
    let mut written = outcome.run_files;
    written.push(outcome.summary_path);
    Ok(CmdOutcome {
        exit_code: if ok { EXIT_OK } else { EXIT_FAILED },
        message: format!(
            "{} rows, {} converged, {} stability-pass",
            outcome.rows.len(),
            outcome.rows.iter().filter(|r| r.converged).count(),
            outcome.rows.iter().filter(|r| r.stability_pass).count()
        ),
        written,
    })
}

/// Samples of a manufactured density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedDocument {
    pub body: String,
    pub dim: usize,
    pub resolution: Resolution,
    pub q: f64,
    /// Exact support function at the nodes.
    pub h: Vec<f64>,
    /// Dual curvature density at the nodes.
    pub f: Vec<f64>,
}

pub fn manufacture(body: &AnalyticBody, resolution: Resolution, q: f64) -> Result<ManufacturedDocument> {
    let grid = Arc::new(SphereGrid::build(resolution)?);
    let spec = RhsSpec::Manufactured(body.clone());
    let f = spec.sample(&grid, q)?;
    let h = spec.exact_solution(&grid)?.unwrap_or_default();
    Ok(ManufacturedDocument {
        body: body.to_string(),
        dim: grid.dim(),
        resolution,
        q,
        h,
        f,
    })
}

pub fn cmd_manufacture(body: &str, resolution: Resolution, q: f64, out: &Path) -> Result<CmdOutcome> {
    let body: AnalyticBody = body.parse()?;
    let doc = manufacture(&body, resolution, q)?;
    write_document(out, &doc)?;
    Ok(CmdOutcome {
        exit_code: EXIT_OK,
        message: format!("wrote {} samples of {}", doc.f.len(), doc.body),
        written: vec![out.to_path_buf()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Mode;

    fn circle_config(f: &str) -> RunConfig {
        RunConfig::new(Resolution::Circle { n: 64 }, 1.0, f.parse().unwrap())
    }

    #[test]
    fn result_document_round_trip() {
        let doc = run_config(&circle_config("1 + 0.05*cos(2θ)")).unwrap();
        assert!(doc.status.converged);
        let text = to_document(&doc).unwrap();
        let back: ResultDocument = from_document(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.support().unwrap().values(), doc.solution.values.as_slice());
    }

    #[test]
    fn reruns_are_byte_identical_outside_timing() {
        let cfg = circle_config("manufacture:ellipse(1.2,1)");
        let a = to_document(&run_config(&cfg).unwrap()).unwrap();
        let b = to_document(&run_config(&cfg).unwrap()).unwrap();
        assert_eq!(strip_timing(&a), strip_timing(&b));
        assert!(a.contains("\n[timing]\n"));
    }

    #[test]
    fn manufactured_run_reports_exact_error() {
        let doc = run_config(&circle_config("manufacture:ellipse(1.2,1)")).unwrap();
        assert!(doc.status.exact_error.unwrap() < 1e-6);
        assert!((doc.status.max_min_h - 1.2).abs() < 1e-6);
    }

    #[test]
    fn verify_ball_and_refuse_unconverged() {
        let doc = run_config(&circle_config("1")).unwrap();
        let r = verify_document(&doc, "ball").unwrap();
        assert!(r.all_pass, "{r:?}");
        assert!(r.stability.delta2 < 1e-14);
        assert_eq!(r.stability.schneider, f64::INFINITY);
        let text = to_document(&r).unwrap();
        assert_eq!(from_document::<VerifyReport>(&text).unwrap(), r);

        let mut bad = doc.clone();
        bad.status.converged = false;
        assert!(verify_document(&bad, "bad").is_err());
    }

    #[test]
    fn battery_is_seeded() {
        let h = SupportFunction::constant(
            Arc::new(SphereGrid::build(Resolution::Circle { n: 64 }).unwrap()),
            1.0,
        )
        .unwrap();
        assert_eq!(spectral_battery(&h, 5, 10).unwrap(), spectral_battery(&h, 5, 10).unwrap());
        assert_ne!(spectral_battery(&h, 5, 10).unwrap(), spectral_battery(&h, 6, 10).unwrap());
    }

    #[test]
    fn manufacture_examples() {
        let d = manufacture(&AnalyticBody::Ball { radius: 1.0 }, Resolution::Circle { n: 32 }, 1.0).unwrap();
        assert!(d.f.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let e = manufacture(
            &AnalyticBody::PerturbedBall {
                amplitude: 0.05,
                mode: crate::body::ModeSpec(Mode::Cos(2)),
            },
            Resolution::Circle { n: 64 },
            1.0,
        )
        .unwrap();
        assert!(e.f.iter().all(|v| *v > 0.0));
    }
}
