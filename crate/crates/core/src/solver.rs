//! Homotopy continuation with a damped Newton corrector for
//!
//! ```text
//! h · det(∇²h + h I) · |Dh|^{q-n-1} = f     on S^n
//! ```
//!
//! The equation is rooted in log form,
//! `G(h) = log σ_n + log h + (q - n - 1) log |Dh| - log f`,
//! whose linearization at the unit ball is `Δ + q`. All iterates are kept
//! even; Newton systems are solved on the even subspace (one unknown per
//! antipodal pair).

use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, FactorizeInto, ReciprocalConditionNum, Solve};
use serde::{Deserialize, Serialize};

use crate::body::{hausdorff_distance, BodyGeometry, SupportFunction};
use crate::error::{Error, Result};
use crate::sphere::{DiffOperators, SphereGrid};

/// Below this reciprocal condition number a Newton system is reported as
/// singular instead of being solved.
pub const RCOND_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub homotopy_steps: usize,
    /// Convergence threshold on `‖G‖_∞`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub shrink: f64,
    pub min_step: f64,
    /// Accepted iterates keep every principal radius above
    /// `convexity_floor · mean(h)`.
    pub convexity_floor: f64,
    pub max_bisections: usize,
    /// Permit q outside (0, n].
    pub override_q_range: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            homotopy_steps: 10,
            newton_tol: 1e-10,
            max_newton_iters: 50,
            shrink: 0.5,
            min_step: 1e-6,
            convexity_floor: 1e-8,
            max_bisections: 10,
            override_q_range: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.homotopy_steps >= 1
            && self.newton_tol > 0.0
            && self.max_newton_iters >= 1
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.min_step > 0.0
            && self.convexity_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("solver config {self:?}")))
        }
    }
}

/// Rejects q outside the uniqueness-backed regime `0 < q <= n` unless
/// overridden; returns a warning when overridden.
pub fn check_q_range(q: f64, dim: usize, allow: bool) -> Result<Option<String>> {
    if q > 0.0 && q <= dim as f64 {
        return Ok(None);
    }
    if allow {
        Ok(Some(format!(
            "q = {q} is outside (0, {dim}]; the linearized operator may be singular on even functions"
        )))
    } else {
        Err(Error::QOutOfRange {
            q,
            dim,
            range: "(0, n]",
        })
    }
}

fn log_residual(geom: &BodyGeometry, f: &[f64], q: f64) -> Vec<f64> {
    let expo = q - geom.dim as f64 - 1.0;
    (0..geom.len())
        .map(|i| geom.sigma_n[i].ln() + geom.h[i].ln() + expo * geom.rho[i].ln() - f[i].ln())
        .collect()
}

fn check_rhs(grid: &SphereGrid, f: &[f64]) -> Result<()> {
    grid.check_len(f)?;
    if let Some(bad) = f.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "right-hand side must be positive (found {bad})"
        )));
    }
    Ok(())
}

/// Node-wise `G(h) = log σ_n + log h + (q-n-1) log |Dh| - log f`.
///
/// Fails with [`Error::NonConvex`] when `h` is not strictly convex, in which
/// case the caller has to damp its step.
pub fn residual(h: &SupportFunction, f: &[f64], q: f64) -> Result<Vec<f64>> {
    check_rhs(h.grid(), f)?;
    let geom = h.geometry();
    geom.require_valid()?;
    Ok(log_residual(&geom, f, q))
}

/// Derivative of [`residual`] at `h` applied to `eta`, evaluated from the
/// frame-invariant formula
/// `b^{ij}(η_ij + η δ_ij) + η/h + (q-n-1)(hη + <∇h,∇η>)/|Dh|²`.
pub fn apply_linearization(h: &SupportFunction, q: f64, eta: &[f64]) -> Result<Vec<f64>> {
    let grid = h.grid();
    grid.check_len(eta)?;
    let geom = h.geometry();
    geom.require_valid()?;
    let d = grid.differentiate(eta)?;
    let expo = q - geom.dim as f64 - 1.0;
    Ok((0..geom.len())
        .map(|i| {
            let [i11, i12, i22] = geom.b_inverse(i);
            let [e11, e12, e22] = d.hess[i];
            let [g1, g2] = geom.grad[i];
            let [d1, d2] = d.grad[i];
            let e = eta[i];
            let curvature = i11 * (e11 + e) + 2.0 * i12 * e12 + i22 * (e22 + e);
            let radial = (geom.h[i] * e + g1 * d1 + g2 * d2) / (geom.rho[i] * geom.rho[i]);
            curvature + e / geom.h[i] + expo * radial
        })
        .collect())
}

/// The linearization of `G` restricted to even node functions, as a dense
/// matrix over the antipodal-pair representatives.
#[derive(Clone, Debug)]
pub struct EvenOperator {
    grid: Arc<SphereGrid>,
    matrix: Array2<f64>,
}

impl EvenOperator {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Applies the operator to an even node field.
    pub fn apply_even(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(eta)?;
        let reduced = Array1::from(self.grid.restrict_even(eta));
        Ok(self.grid.extend_even(self.matrix.dot(&reduced).as_slice().expect("contiguous")))
    }

    /// Eigenvalues as `(re, im)` pairs, unordered.
    pub fn eigenvalues(&self) -> Result<Vec<(f64, f64)>> {
        let ev = self
            .matrix
            .eigvals()
            .map_err(|e| Error::LinearAlgebra(e.to_string()))?;
        Ok(ev.iter().map(|c| (c.re, c.im)).collect())
    }

    /// Solves `L x = rhs` on the even subspace. `Ok(Err(rcond))` signals a
    /// numerically singular system.
    pub fn solve_even(&self, rhs: &[f64]) -> Result<std::result::Result<Vec<f64>, f64>> {
        let lu = self
            .matrix
            .clone()
            .factorize_into()
            .map_err(|e| Error::LinearAlgebra(e.to_string()))?;
        let rcond = lu.rcond().map_err(|e| Error::LinearAlgebra(e.to_string()))?;
        if !(rcond > RCOND_FLOOR) {
            return Ok(Err(rcond));
        }
        let b = Array1::from(self.grid.restrict_even(rhs));
        let x = lu.solve(&b).map_err(|e| Error::LinearAlgebra(e.to_string()))?;
        Ok(Ok(self.grid.extend_even(x.as_slice().expect("contiguous"))))
    }
}

/// Assembles the even-subspace Jacobian of [`residual`] at `h`.
pub fn linearize(h: &SupportFunction, q: f64) -> Result<EvenOperator> {
    let geom = h.geometry();
    geom.require_valid()?;
    Ok(assemble(h.grid(), &geom, q))
}

fn assemble(grid: &Arc<SphereGrid>, geom: &BodyGeometry, q: f64) -> EvenOperator {
    let n = grid.len();
    let reps = grid.even_reps();
    let even_index = grid.even_index();
    let expo = q - geom.dim as f64 - 1.0;
    let mut matrix = Array2::<f64>::zeros((reps.len(), reps.len()));
    let mut row = vec![0.0; n];

    fn add_row(row: &mut [f64], st: &crate::sphere::Stencil, p: usize, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        for (j, w) in st.row(p) {
            row[j] += coeff * w;
        }
        row[p] += coeff * st.diagonal(p);
    }

    for (r, &p) in reps.iter().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        let [i11, i12, i22] = geom.b_inverse(p);
        let [g1, g2] = geom.grad[p];
        let k = expo / (geom.rho[p] * geom.rho[p]);
        let c0 = i11 + i22 + 1.0 / geom.h[p] + k * geom.h[p];
        match grid.operators() {
            DiffOperators::Circle { d1, d2 } => {
                add_row(&mut row, d2, p, i11);
                add_row(&mut row, d1, p, k * g1);
            }
            DiffOperators::Sphere {
                d_theta,
                d_theta2,
                d_phi,
                d_phi2,
                sin,
                cot,
            } => {
                let (s, c) = (sin[p], cot[p]);
                add_row(&mut row, d_theta2, p, i11);
                add_row(&mut row, d_phi2, p, i22 / (s * s));
                add_row(&mut row, d_theta, p, i22 * c + k * g1);
                add_row(&mut row, d_phi, p, -2.0 * i12 * c / s + k * g2 / s);
                let mixed = 2.0 * i12 / s;
                if mixed != 0.0 {
                    for (m, w) in d_theta.row(p).chain(std::iter::once((p, d_theta.diagonal(p)))) {
                        add_row(&mut row, d_phi, m, mixed * w);
                    }
                }
            }
        }
        row[p] += c0;
        for (j, &v) in row.iter().enumerate() {
            matrix[[r, even_index[j]]] += v;
        }
    }
    EvenOperator {
        grid: grid.clone(),
        matrix,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonIterate {
    pub iteration: usize,
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// Accepted line-search step (0 for the initial state).
    pub step: f64,
    pub min_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyStep {
    pub t: f64,
    pub newton_iterations: usize,
    pub residual_sup: f64,
    pub converged: bool,
}

/// Why a solve stopped without converging.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Failure {
    /// The Newton system was numerically singular.
    Singular { rcond: f64 },
    /// No step above `min_step` decreased the residual while staying convex.
    LineSearch { residual_sup: f64 },
    MaxIterations { residual_sup: f64 },
    /// Continuation gave up after exhausting the bisections.
    HomotopyBreakdown { t: f64 },
}

/// Continuation state at one point of the path `f_t = (1 - t) + t f`.
#[derive(Clone, Debug)]
pub struct HomotopyState {
    pub t: f64,
    pub f_t: Vec<f64>,
    pub h: SupportFunction,
    pub log: Vec<NewtonIterate>,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub h: SupportFunction,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub converged: bool,
    pub failure: Option<Failure>,
    pub newton_log: Vec<NewtonIterate>,
    pub trace: Vec<HomotopyStep>,
    pub warnings: Vec<String>,
    pub wall_time: Duration,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration for `G(h) = 0` starting at `h0`.
///
/// Each step solves `L_h η = -G(h)` on the even subspace and takes the first
/// `s ∈ {1, shrink, shrink², …}` that lowers `‖G‖₂` and keeps the body
/// strictly convex above the configured floor.
pub fn newton_solve(
    h0: &SupportFunction,
    f: &[f64],
    q: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let start = Instant::now();
    cfg.validate()?;
    let grid = h0.grid().clone();
    check_rhs(&grid, f)?;
    h0.require_even()?;
    if !grid.is_even(f) {
        return Err(Error::NotEven);
    }
    let geom = h0.geometry();
    geom.require_valid()?;

    let mut h = h0.clone();
    let mut g = log_residual(&geom, f, q);
    let mut log = vec![NewtonIterate {
        iteration: 0,
        residual_sup: sup_norm(&g),
        residual_l2: l2_norm(&g),
        step: 0.0,
        min_radius: geom.min_radius,
    }];
    let mut geom = geom;
    let mut failure = None;
    let mut iteration = 0;
    while sup_norm(&g) > cfg.newton_tol {
        if iteration == cfg.max_newton_iters {
            failure = Some(Failure::MaxIterations {
                residual_sup: sup_norm(&g),
            });
            break;
        }
        iteration += 1;
        let op = assemble(&grid, &geom, q);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let eta = match op.solve_even(&rhs)? {
            Ok(eta) => eta,
            Err(rcond) => {
                failure = Some(Failure::Singular { rcond });
                break;
            }
        };
        let norm0 = l2_norm(&g);
        let mut step = 1.0;
        let mut accepted = None;
        while step >= cfg.min_step {
            let trial: Vec<f64> = h.values().iter().zip(&eta).map(|(a, d)| a + step * d).collect();
            let trial = grid.project_even(&trial)?;
            if let Ok(cand) = SupportFunction::new(grid.clone(), trial) {
                let cg = cand.geometry();
                let floor = cfg.convexity_floor * cand.mean();
                if cg.min_radius > floor {
                    let cand_g = log_residual(&cg, f, q);
                    if l2_norm(&cand_g) < norm0 {
                        accepted = Some((cand, cg, cand_g));
                        break;
                    }
                }
            }
            step *= cfg.shrink;
        }
        let Some((cand, cg, cand_g)) = accepted else {
            failure = Some(Failure::LineSearch {
                residual_sup: sup_norm(&g),
            });
            break;
        };
        h = cand;
        geom = cg;
        g = cand_g;
        log.push(NewtonIterate {
            iteration,
            residual_sup: sup_norm(&g),
            residual_l2: l2_norm(&g),
            step,
            min_radius: geom.min_radius,
        });
    }
    let residual_sup = sup_norm(&g);
    Ok(SolveResult {
        converged: failure.is_none() && residual_sup <= cfg.newton_tol && geom.valid,
        residual_sup,
        residual_l2: l2_norm(&g),
        h,
        failure,
        newton_log: log,
        trace: Vec::new(),
        warnings: Vec::new(),
        wall_time: start.elapsed(),
    })
}

/// Follows `f_t = (1 - t) + t f` from the unit ball at `t = 0` to `t = 1`,
/// correcting with [`newton_solve`] at every step. A failed corrector halves
/// the increment and retries from the last accepted point.
pub fn solve_homotopy(
    grid: &Arc<SphereGrid>,
    f: &[f64],
    q: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let start = Instant::now();
    cfg.validate()?;
    check_rhs(grid, f)?;
    if !grid.is_even(f) {
        return Err(Error::NotEven);
    }
    let warnings: Vec<String> = check_q_range(q, grid.dim(), cfg.override_q_range)?
        .into_iter()
        .collect();

    let mut state = HomotopyState {
        t: 0.0,
        f_t: vec![1.0; grid.len()],
        h: SupportFunction::constant(grid.clone(), 1.0)?,
        log: Vec::new(),
    };
    let mut trace = Vec::new();
    let mut dt = 1.0 / cfg.homotopy_steps as f64;
    let mut bisections = 0;
    let mut last: Option<SolveResult> = None;

    while state.t < 1.0 {
        let t_next = if state.t + dt >= 1.0 - 1e-12 { 1.0 } else { state.t + dt };
        let f_t: Vec<f64> = f.iter().map(|v| (1.0 - t_next) + t_next * v).collect();
        let result = newton_solve(&state.h, &f_t, q, cfg)?;
        trace.push(HomotopyStep {
            t: t_next,
            newton_iterations: result.newton_log.len() - 1,
            residual_sup: result.residual_sup,
            converged: result.converged,
        });
        if result.converged {
            state.t = t_next;
            state.f_t = f_t;
            state.h = result.h.clone();
            state.log.extend(result.newton_log.iter().cloned());
            last = Some(result);
            continue;
        }
        if bisections == cfg.max_bisections {
            return Ok(SolveResult {
                converged: false,
                failure: Some(Failure::HomotopyBreakdown { t: state.t }),
                trace,
                warnings,
                wall_time: start.elapsed(),
                newton_log: state.log,
                ..result
            });
        }
        bisections += 1;
        dt *= 0.5;
    }
    let last = last.expect("at least one homotopy step");
    Ok(SolveResult {
        newton_log: state.log,
        trace,
        warnings,
        wall_time: start.elapsed(),
        ..last
    })
}

#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub converged: bool,
    pub failure: Option<Failure>,
    pub residual_sup: f64,
    pub h: SupportFunction,
}

#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub outcomes: Vec<ProbeOutcome>,
    /// `(i, j, δ_H)` over pairs of converged outcomes.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub max_pairwise: f64,
    /// All converged outputs agree within `tolerance`.
    pub same_solution: bool,
    pub tolerance: f64,
}

pub const UNIQUENESS_TOL: f64 = 1e-6;

/// Runs plain Newton (no continuation) from each initial body and compares
/// every pair of converged outputs in the Hausdorff distance.
pub fn uniqueness_probe(
    f: &[f64],
    q: f64,
    cfg: &SolverConfig,
    inits: &[SupportFunction],
) -> Result<UniquenessReport> {
    let mut outcomes = Vec::with_capacity(inits.len());
    for h0 in inits {
        let r = newton_solve(h0, f, q, cfg)?;
        outcomes.push(ProbeOutcome {
            converged: r.converged,
            failure: r.failure,
            residual_sup: r.residual_sup,
            h: r.h,
        });
    }
    let mut pairwise = Vec::new();
    for i in 0..outcomes.len() {
        for j in i + 1..outcomes.len() {
            if outcomes[i].converged && outcomes[j].converged {
                pairwise.push((i, j, hausdorff_distance(&outcomes[i].h, &outcomes[j].h)?));
            }
        }
    }
    let max_pairwise = pairwise.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(UniquenessReport {
        outcomes,
        pairwise,
        max_pairwise,
        same_solution: max_pairwise <= UNIQUENESS_TOL,
        tolerance: UNIQUENESS_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{analytic_support, AnalyticBody, Mode};
    use crate::sphere::Resolution;

    fn circle(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::build(Resolution::Circle { n }).unwrap())
    }

    fn sphere(n_lat: usize, n_lon: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::build(Resolution::Sphere { n_lat, n_lon }).unwrap())
    }

    fn manufactured(grid: &SphereGrid, body: &AnalyticBody, q: f64) -> Vec<f64> {
        grid.sample(|x| body.exact_dual_density(x, grid.dim(), q).unwrap())
    }

    #[test]
    fn residual_examples() {
        let g = circle(64);
        let one = SupportFunction::constant(g.clone(), 1.0).unwrap();
        let f = vec![1.0; 64];
        for q in [0.3, 1.0, 2.5] {
            assert!(residual(&one, &f, q).unwrap().iter().all(|&v| v == 0.0));
            let r = SupportFunction::constant(g.clone(), 1.7).unwrap();
            let res = residual(&r, &f, q).unwrap();
            assert!(res.iter().all(|v| (v - q * 1.7f64.ln()).abs() < 1e-14));
        }
        let body = AnalyticBody::ellipse(1.2, 1.0);
        let e = analytic_support(&body, g.clone()).unwrap();
        let res = residual(&e, &manufactured(&g, &body, 1.0), 1.0).unwrap();
        assert!(sup_norm(&res) < 1e-9, "{}", sup_norm(&res));
    }

    #[test]
    fn residual_rejects_nonconvex() {
        let g = circle(64);
        let vals = g.sample(|x| 1.0 + 0.6 * (x[0] * x[0] - x[1] * x[1]));
        let h = SupportFunction::new(g, vals).unwrap();
        assert!(matches!(residual(&h, &vec![1.0; 64], 1.0), Err(Error::NonConvex { .. })));
    }

    #[test]
    fn assembled_matrix_matches_operator() {
        for g in [circle(32), sphere(8, 16)] {
            let vals = Mode::Cos(2)
                .sample(&g)
                .into_iter()
                .map(|m| 1.0 + 0.1 * m)
                .collect();
            let h = SupportFunction::new(g.clone(), vals).unwrap();
            let eta = g.sample(|x| x[0] * x[0] + 0.5 * x[1] * x[1] * x[1] * x[1] - 0.2 * x[2] * x[2]);
            let op = linearize(&h, 0.7).unwrap();
            let a = op.apply_even(&eta).unwrap();
            let b = apply_linearization(&h, 0.7, &eta).unwrap();
            let scale = sup_norm(&b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10 * scale, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn ball_linearization_spectrum_on_circle() {
        let g = circle(32);
        let one = SupportFunction::constant(g.clone(), 1.0).unwrap();
        let mut ev: Vec<f64> = linearize(&one, 1.0)
            .unwrap()
            .eigenvalues()
            .unwrap()
            .into_iter()
            .map(|(re, im)| {
                assert!(im.abs() < 1e-9);
                re
            })
            .collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-9);
        assert!((ev[1] + 3.0).abs() < 1e-9 && (ev[2] + 3.0).abs() < 1e-9);
        assert!((ev[3] + 15.0).abs() < 1e-9);
    }

    #[test]
    fn newton_from_ball_with_unit_rhs_is_immediate() {
        let g = circle(64);
        let one = SupportFunction::constant(g.clone(), 1.0).unwrap();
        let r = newton_solve(&one, &vec![1.0; 64], 1.0, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.newton_log.len(), 1);
    }

    #[test]
    fn newton_recovers_manufactured_ellipse() {
        let g = circle(256);
        let body = AnalyticBody::ellipse(1.2, 1.0);
        let f = manufactured(&g, &body, 1.0);
        let one = SupportFunction::constant(g.clone(), 1.0).unwrap();
        let r = newton_solve(&one, &f, 1.0, &SolverConfig::default()).unwrap();
        assert!(r.converged, "{:?}", r.failure);
        let exact = analytic_support(&body, g).unwrap();
        assert!(hausdorff_distance(&r.h, &exact).unwrap() < 1e-6);
        for w in r.newton_log.windows(2) {
            assert!(w[1].residual_l2 <= w[0].residual_l2);
        }
    }

    #[test]
    fn singular_linearization_is_reported() {
        // q = 4 puts the cos 2θ mode of Δ + q in the kernel
        let g = circle(64);
        let one = SupportFunction::constant(g.clone(), 1.0).unwrap();
        let f: Vec<f64> = Mode::Cos(2).sample(&g).iter().map(|m| 1.0 + 0.01 * m).collect();
        let r = newton_solve(&one, &f, 4.0, &SolverConfig::default()).unwrap();
        assert!(!r.converged);
        assert!(matches!(r.failure, Some(Failure::Singular { .. })), "{:?}", r.failure);
    }

    #[test]
    fn homotopy_rejects_bad_inputs() {
        let g = circle(64);
        let cfg = SolverConfig::default();
        let odd: Vec<f64> = g.sample(|x| 1.0 + 0.05 * x[0]);
        assert!(matches!(solve_homotopy(&g, &odd, 1.0, &cfg), Err(Error::NotEven)));
        let f = vec![1.0; 64];
        assert!(matches!(solve_homotopy(&g, &f, 1.5, &cfg), Err(Error::QOutOfRange { .. })));
        assert!(solve_homotopy(&g, &f, -0.5, &cfg).is_err());
        let over = SolverConfig {
            override_q_range: true,
            ..SolverConfig::default()
        };
        let r = solve_homotopy(&g, &f, 1.5, &over).unwrap();
        assert!(r.converged && r.warnings.len() == 1);
    }

    #[test]
    fn homotopy_linear_response() {
        // ‖h - 1‖_∞ ≈ ε / |q - 4| for f = 1 + ε cos 2θ
        let g = circle(128);
        let eps = 0.05;
        let f: Vec<f64> = Mode::Cos(2).sample(&g).iter().map(|m| 1.0 + eps * m).collect();
        let r = solve_homotopy(&g, &f, 1.0, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.residual_sup <= 1e-10);
        let dev = r.h.values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        let predicted = eps / 3.0;
        assert!((dev - predicted).abs() < 0.2 * predicted, "{dev} vs {predicted}");
        assert_eq!(r.trace.len(), 10);
    }

    #[test]
    fn sphere_newton_small_perturbation() {
        let g = sphere(12, 24);
        let f: Vec<f64> = Mode::Harmonic { l: 2, m: 1 }
            .sample(&g)
            .iter()
            .map(|m| 1.0 + 0.05 * m)
            .collect();
        let r = solve_homotopy(&g, &f, 2.0, &SolverConfig::default()).unwrap();
        assert!(r.converged, "{:?}", r.failure);
        assert!(r.h.is_even());
    }

    #[test]
    fn probe_isotropic_case() {
        let g = circle(128);
        let f = vec![1.0; 128];
        let inits = vec![
            SupportFunction::constant(g.clone(), 0.8).unwrap(),
            SupportFunction::constant(g.clone(), 1.3).unwrap(),
            analytic_support(&AnalyticBody::ellipse(1.1, 1.0), g.clone()).unwrap(),
        ];
        let rep = uniqueness_probe(&f, 1.0, &SolverConfig::default(), &inits).unwrap();
        assert!(rep.outcomes.iter().all(|o| o.converged));
        assert!(rep.max_pairwise <= 1e-8, "{}", rep.max_pairwise);
        assert!(rep.same_solution);
    }
}
