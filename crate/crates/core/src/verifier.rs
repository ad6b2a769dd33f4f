//! Numerical certificates for the stability estimate of the dual curvature
//! measure and the integral inequalities it rests on.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::{
    diameter_union, hausdorff_distance, l2_distance, normalize_body, BodyGeometry,
    SupportFunction,
};
use crate::error::{Error, Result};
use crate::sphere::SphereGrid;

/// `lhs <= rhs + max(1e-10, 1e-8 |rhs|)`.
pub fn inequality_holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + (1e-8 * rhs.abs()).max(1e-10)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            pass: inequality_holds(lhs, rhs),
        }
    }

    /// `rhs - lhs`.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Density `g = h σ_n |Dh|^{q-n-1}` of the dual curvature measure.
#[derive(Clone, Debug)]
pub struct DualDensity {
    pub q: f64,
    pub g: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub ratio: f64,
}

pub fn dual_density(geom: &BodyGeometry, q: f64) -> Result<DualDensity> {
    geom.require_valid()?;
    let expo = q - geom.dim as f64 - 1.0;
    let g: Vec<f64> = (0..geom.len())
        .map(|i| geom.h[i] * geom.sigma_n[i] * geom.rho[i].powf(expo))
        .collect();
    let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DualDensity {
        q,
        g,
        max,
        min,
        ratio: max / min,
    })
}

/// Cap constant `c₁ = σ({<x,w> >= 1/2}) / (2|S^n|)` and the stability
/// constant `β = 1 / (sqrt(n+1) c₁)`.
pub fn compute_beta(dim: usize) -> Result<(f64, f64)> {
    let (cap, area) = match dim {
        // arc of half-angle π/3
        1 => (2.0 * (0.5f64).acos(), 2.0 * PI),
        // cap of polar angle π/3
        2 => (2.0 * PI * (1.0 - 0.5), 4.0 * PI),
        _ => return Err(Error::InvalidParameter(format!("dimension {dim}"))),
    };
    let c1 = cap / (2.0 * area);
    Ok((c1, 1.0 / (((dim + 1) as f64).sqrt() * c1)))
}

fn estimate_q_range(q: f64, dim: usize) -> bool {
    let n = dim as f64;
    n - 3.0 <= q && q <= n + 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub q: f64,
    pub q_in_estimate_range: bool,
    /// `M/m` of the dual density.
    pub ratio: f64,
    /// `M/m - 1`.
    pub epsilon: f64,
    pub delta2: f64,
    pub delta_h: f64,
    pub c1: f64,
    pub beta: f64,
    /// `β sqrt(ε)`.
    pub bound: f64,
    pub pass: bool,
    /// Schneider ratio of `(K̄, B₁)`; infinite when `K̄ = B₁`.
    pub schneider: f64,
    pub diameter_union: f64,
    pub checks: Vec<InequalityCheck>,
    pub warnings: Vec<String>,
}

impl StabilityReport {
    pub fn all_pass(&self) -> bool {
        self.pass && self.checks.iter().all(|c| c.pass)
    }
}

/// Compares `δ₂(K̄, B₁)` against `β sqrt(M/m - 1)`.
pub fn check_stability(h: &SupportFunction, q: f64) -> Result<StabilityReport> {
    h.require_even()?;
    let dim = h.dim();
    let geom = h.geometry();
    let density = dual_density(&geom, q)?;
    let (c1, beta) = compute_beta(dim)?;
    let normalized = normalize_body(h);
    let ball = SupportFunction::constant(h.grid().clone(), 1.0)?;
    let delta2 = l2_distance(&normalized, &ball)?;
    let epsilon = (density.ratio - 1.0).max(0.0);
    let bound = beta * epsilon.sqrt();
    let mut warnings = Vec::new();
    let in_range = estimate_q_range(q, dim);
    if !in_range {
        warnings.push(format!("q = {q} outside [n-3, n+1]; the estimate is not guaranteed"));
    }
    Ok(StabilityReport {
        q,
        q_in_estimate_range: in_range,
        ratio: density.ratio,
        epsilon,
        delta2,
        delta_h: hausdorff_distance(&normalized, &ball)?,
        c1,
        beta,
        bound,
        pass: delta2 <= bound + 1e-10,
        schneider: check_schneider(&normalized, &ball)?,
        diameter_union: diameter_union(&normalized, &ball)?,
        checks: Vec::new(),
        warnings,
    })
}

/// Local Aleksandrov-Fenchel inequality for k = n:
/// `n ∫ f² h σ_n ≤ ∫ h² σ_n b^{ij} ∇_i f ∇_j f`, after projecting `f` onto
/// `∫ f h σ_n dσ = 0`.
pub fn check_spectral_inequality(h: &SupportFunction, f_test: &[f64]) -> Result<InequalityCheck> {
    let grid = h.grid();
    grid.check_len(f_test)?;
    let geom = h.geometry();
    geom.require_valid()?;
    let f = orthogonalize(grid, &geom, f_test)?;
    let df = grid.differentiate(&f)?;
    let n = geom.dim as f64;
    let lhs_density: Vec<f64> = (0..geom.len())
        .map(|i| n * f[i] * f[i] * geom.h[i] * geom.sigma_n[i])
        .collect();
    let rhs_density: Vec<f64> = (0..geom.len())
        .map(|i| {
            let [i11, i12, i22] = geom.b_inverse(i);
            let [f1, f2] = df.grad[i];
            let quad = i11 * f1 * f1 + 2.0 * i12 * f1 * f2 + i22 * f2 * f2;
            geom.h[i] * geom.h[i] * geom.sigma_n[i] * quad
        })
        .collect();
    Ok(InequalityCheck::new(
        "spectral",
        grid.integrate(&lhs_density)?,
        grid.integrate(&rhs_density)?,
    ))
}

/// `f - (∫ f h σ_n) / (∫ h σ_n)`.
pub fn orthogonalize(grid: &SphereGrid, geom: &BodyGeometry, f: &[f64]) -> Result<Vec<f64>> {
    let w: Vec<f64> = (0..geom.len()).map(|i| geom.h[i] * geom.sigma_n[i]).collect();
    let fw: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
    let shift = grid.integrate(&fw)? / grid.integrate(&w)?;
    Ok(f.iter().map(|v| v - shift).collect())
}

/// The `|X|^{α+2}` inequality with `X = Dh` and `dV = h σ_n dσ`.
pub fn check_x_alpha_inequality(h: &SupportFunction, alpha: f64) -> Result<InequalityCheck> {
    let grid = h.grid();
    let geom = h.geometry();
    geom.require_valid()?;
    let n = geom.dim as f64;
    let len = geom.len();
    for i in 0..len {
        assert!(geom.rho[i] >= geom.h[i] && geom.h[i] > 0.0, "|X| >= h > 0 violated");
    }
    let dv: Vec<f64> = (0..len).map(|i| geom.h[i] * geom.sigma_n[i]).collect();
    let drho = grid.differentiate(&geom.rho)?;
    let integral = |field: &dyn Fn(usize) -> f64| -> f64 {
        (0..len).map(|i| grid.weights()[i] * field(i) * dv[i]).sum()
    };
    let volume = integral(&|_| 1.0);
    let lhs = n * integral(&|i| geom.rho[i].powf(alpha + 2.0));
    let moment: [f64; 3] =
        std::array::from_fn(|c| integral(&|i| geom.rho[i].powf(0.5 * alpha) * geom.boundary[i][c]));
    let moment_sq = moment.iter().map(|m| m * m).sum::<f64>();
    let main = integral(&|i| geom.rho[i].powf(alpha) * geom.h[i] * geom.sigma1[i]);
    let cross = integral(&|i| {
        let [g1, g2] = geom.grad[i];
        let [r1, r2] = drho.grad[i];
        geom.rho[i].powf(alpha - 1.0) * geom.h[i] * (g1 * r1 + g2 * r2)
    });
    let rhs = n * moment_sq / volume + main + (0.25 * alpha * alpha + alpha) * cross;
    Ok(InequalityCheck::new("x_alpha", lhs, rhs))
}

/// `n ∫ |Dh|² dσ ≤ (M/m) ∫ h (Δh + n h) dσ` with `M, m` from the dual
/// density at index `q`.
pub fn check_gradient_inequality(h: &SupportFunction, q: f64) -> Result<InequalityCheck> {
    h.require_even()?;
    let dim = h.dim();
    if !estimate_q_range(q, dim) {
        return Err(Error::QOutOfRange {
            q,
            dim,
            range: "[n-3, n+1]",
        });
    }
    let grid = h.grid();
    let geom = h.geometry();
    let density = dual_density(&geom, q)?;
    let n = dim as f64;
    let rho_sq: Vec<f64> = geom.rho.iter().map(|r| r * r).collect();
    let mixed: Vec<f64> = (0..geom.len()).map(|i| geom.h[i] * geom.sigma1[i]).collect();
    Ok(InequalityCheck::new(
        "gradient",
        n * grid.integrate(&rho_sq)?,
        density.ratio * grid.integrate(&mixed)?,
    ))
}

/// Poincaré step `n ∫ u² ≤ ∫ |∇u|²` for the even, mean-zero part of `u`.
pub fn check_poincare(grid: &SphereGrid, u: &[f64]) -> Result<InequalityCheck> {
    let even = grid.project_even(u)?;
    let mean = grid.mean(&even)?;
    let v: Vec<f64> = even.iter().map(|x| x - mean).collect();
    let d = grid.differentiate(&v)?;
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let grad_sq: Vec<f64> = d.grad.iter().map(|[a, b]| a * a + b * b).collect();
    Ok(InequalityCheck::new(
        "poincare",
        grid.dim() as f64 * grid.integrate(&sq)?,
        grid.integrate(&grad_sq)?,
    ))
}

/// `δ₂² diam^n / δ_H^{n+2}`; bounded below by Schneider's dimensional
/// constant. `+∞` when the bodies coincide on the grid up to roundoff
/// (`δ_H ≤ 64 ε max h`).
pub fn check_schneider(h1: &SupportFunction, h2: &SupportFunction) -> Result<f64> {
    let delta_h = hausdorff_distance(h1, h2)?;
    if delta_h <= 64.0 * f64::EPSILON * h1.max().max(h2.max()) {
        return Ok(f64::INFINITY);
    }
    let n = h1.dim() as i32;
    let delta2 = l2_distance(h1, h2)?;
    let diam = diameter_union(h1, h2)?;
    Ok(delta2 * delta2 * diam.powi(n) / delta_h.powi(n + 2))
}

/// Zeroth- and first-order monitoring quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub q: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub max_grad: f64,
    /// `max h / min h`.
    pub h_ratio: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Dual density `M/m` at index q.
    pub density_ratio: f64,
}

pub fn c0_c1_report(h: &SupportFunction, q: f64) -> Result<BoundsReport> {
    let geom = h.geometry();
    let density = dual_density(&geom, q)?;
    let max_grad = geom
        .grad
        .iter()
        .map(|[a, b]| (a * a + b * b).sqrt())
        .fold(0.0, f64::max);
    Ok(BoundsReport {
        q,
        min_h: h.min(),
        max_h: h.max(),
        max_grad,
        h_ratio: h.max() / h.min(),
        min_radius: geom.min_radius,
        max_radius: geom.max_radius,
        density_ratio: density.ratio,
    })
}

/// Random polynomial of total degree `<= degree` in the ambient coordinates,
/// with coefficients uniform in `[-1, 1]` damped by `(1 + deg)^{-2}`.
pub fn random_test_function<R: Rng>(grid: &SphereGrid, rng: &mut R, degree: u32) -> Vec<f64> {
    let coords = grid.dim() + 1;
    let mut terms = Vec::new();
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            let cmax = if coords == 3 { degree - a - b } else { 0 };
            for c in 0..=cmax {
                let deg = a + b + c;
                let coef = rng.random_range(-1.0..=1.0) / ((1 + deg) as f64).powi(2);
                terms.push(([a as i32, b as i32, c as i32], coef));
            }
        }
    }
    grid.sample(|x| {
        terms
            .iter()
            .map(|(p, c)| c * x[0].powi(p[0]) * x[1].powi(p[1]) * x[2].powi(p[2]))
            .sum()
    })
}
