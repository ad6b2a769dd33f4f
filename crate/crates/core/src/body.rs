//! Convex bodies described by their support functions on a [`SphereGrid`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::SphereGrid;

/// Grid samples of a support function `h > 0`.
#[derive(Clone, Debug)]
pub struct SupportFunction {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
    even: bool,
}

impl SupportFunction {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        let min_h = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min_h > 0.0) {
            return Err(Error::NonPositive { min_h });
        }
        let even = grid.is_even(&values);
        Ok(Self { grid, values, even })
    }

    pub fn constant(grid: Arc<SphereGrid>, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// True when `values[i] == values[antipode[i]]` exactly.
    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn require_even(&self) -> Result<()> {
        if self.even {
            Ok(())
        } else {
            Err(Error::NotEven)
        }
    }

    /// Antipodal symmetrization.
    pub fn to_even(&self) -> Self {
        let values = self.grid.project_even(&self.values).expect("length checked");
        Self {
            grid: self.grid.clone(),
            values,
            even: true,
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.grid.mean(&self.values).expect("length checked")
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.resolution() == other.grid.resolution()
        {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn geometry(&self) -> BodyGeometry {
        evaluate_geometry(self)
    }
}

/// Everything derived from `h` pointwise: the gradient in the tangent frame,
/// the boundary point `F = ∇h + h x`, `ρ = |F|`, the curvature matrix
/// `b = ∇²h + h I`, its symmetric functions and eigenvalues.
#[derive(Clone, Debug)]
pub struct BodyGeometry {
    pub dim: usize,
    pub h: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub boundary: Vec<[f64; 3]>,
    /// `|Dh| = sqrt(h² + |∇h|²)`, the radial length at the boundary point with normal x.
    pub rho: Vec<f64>,
    /// `[b11, b12, b22]`; only `b11` is meaningful on S¹.
    pub b: Vec<[f64; 3]>,
    pub sigma1: Vec<f64>,
    pub sigma_n: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Principal radii in ascending order; on S¹ both entries equal `b11`.
    pub radii: Vec<[f64; 2]>,
    pub laplacian: Vec<f64>,
    pub min_radius: f64,
    pub max_radius: f64,
    pub valid: bool,
}

impl BodyGeometry {
    pub fn require_valid(&self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::NonConvex {
                min_radius: self.min_radius,
            })
        }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Inverse of `b` at node `i` as `[b^11, b^12, b^22]`.
    pub fn b_inverse(&self, i: usize) -> [f64; 3] {
        let [a, c, d] = self.b[i];
        if self.dim == 1 {
            [1.0 / a, 0.0, 0.0]
        } else {
            let det = self.sigma_n[i];
            [d / det, -c / det, a / det]
        }
    }
}

pub fn evaluate_geometry(h: &SupportFunction) -> BodyGeometry {
    let grid = h.grid();
    let dim = grid.dim();
    let hv = h.values();
    let d = grid.differentiate(hv).expect("length checked");
    let n = hv.len();

    let mut boundary = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut sigma1 = Vec::with_capacity(n);
    let mut sigma_n = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for i in 0..n {
        let x = grid.nodes()[i];
        let [e1, e2] = grid.frames()[i];
        let [g1, g2] = d.grad[i];
        let hi = hv[i];
        boundary.push(std::array::from_fn(|c| hi * x[c] + g1 * e1[c] + g2 * e2[c]));
        rho.push((hi * hi + g1 * g1 + g2 * g2).sqrt());
        let [h11, h12, h22] = d.hess[i];
        if dim == 1 {
            let b11 = h11 + hi;
            b.push([b11, 0.0, 0.0]);
            sigma1.push(b11);
            sigma_n.push(b11);
            radii.push([b11, b11]);
        } else {
            let (b11, b22) = (h11 + hi, h22 + hi);
            b.push([b11, h12, b22]);
            sigma1.push(b11 + b22);
            sigma_n.push(b11 * b22 - h12 * h12);
            let mid = 0.5 * (b11 + b22);
            let half = (0.25 * (b11 - b22) * (b11 - b22) + h12 * h12).sqrt();
            radii.push([mid - half, mid + half]);
        }
    }
    let min_radius = radii.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
    let max_radius = radii.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max);
    BodyGeometry {
        dim,
        h: hv.to_vec(),
        grad: d.grad,
        boundary,
        rho,
        kappa: sigma_n.iter().map(|s| 1.0 / s).collect(),
        b,
        sigma1,
        sigma_n,
        radii,
        laplacian: d.laplacian,
        min_radius,
        max_radius,
        valid: min_radius > 0.0,
    }
}

/// Normalized L² distance `(⨍ |h1 - h2|² dσ)^{1/2}`.
pub fn l2_distance(h1: &SupportFunction, h2: &SupportFunction) -> Result<f64> {
    h1.same_grid(h2)?;
    let sq: Vec<f64> = h1
        .values()
        .iter()
        .zip(h2.values())
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    Ok(h1.grid().mean(&sq)?.sqrt())
}

/// `max |h1 - h2|` over the nodes.
pub fn hausdorff_distance(h1: &SupportFunction, h2: &SupportFunction) -> Result<f64> {
    h1.same_grid(h2)?;
    Ok(h1
        .values()
        .iter()
        .zip(h2.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Width of the convex hull of `K1 ∪ K2`, maximized over node directions:
/// `max_x [h(x) + h(-x)]` with `h = max(h1, h2)`.
pub fn diameter_union(h1: &SupportFunction, h2: &SupportFunction) -> Result<f64> {
    h1.same_grid(h2)?;
    let hull: Vec<f64> = h1
        .values()
        .iter()
        .zip(h2.values())
        .map(|(a, b)| a.max(*b))
        .collect();
    Ok(h1
        .grid()
        .antipode()
        .iter()
        .enumerate()
        .map(|(i, &a)| hull[i] + hull[a])
        .fold(0.0, f64::max))
}

/// `h / ⨍ h dσ`, the body rescaled to unit mean width.
pub fn normalize_body(h: &SupportFunction) -> SupportFunction {
    let mean = h.mean();
    let values = h.values().iter().map(|v| v / mean).collect();
    SupportFunction {
        grid: h.grid().clone(),
        values,
        even: h.is_even(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundtripStats {
    pub max: f64,
    pub rms: f64,
}

/// Rebuilds `h` from the radial description of the same body and reports
/// the discrepancy.
///
/// The radial function is resampled onto the grid from the nearest boundary
/// direction with a first-order correction, differentiated on the grid, and
/// pushed back through `h(ν) = ρ² / sqrt(ρ² + |∇ρ|²)` where `ν` is the normal
/// at `ρ(u) u`. The reference `h(ν)` is interpolated the same way.
pub fn radial_support_roundtrip(h: &SupportFunction) -> Result<RoundtripStats> {
    let geom = h.geometry();
    geom.require_valid()?;
    let grid = h.grid();
    let n = grid.len();
    let nodes = grid.nodes();
    let dirs: Vec<[f64; 3]> = geom
        .boundary
        .iter()
        .zip(&geom.rho)
        .map(|(f, r)| [f[0] / r, f[1] / r, f[2] / r])
        .collect();
    if grid.dim() == 1 {
        check_circle_monotone(&dirs)?;
    }

    // ∇ρ at the sampled directions: ρ (u - x / <x, u>)
    let rho_grad_at_dirs: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let (u, x) = (dirs[i], nodes[i]);
            let c = dot(x, u);
            std::array::from_fn(|k| geom.rho[i] * (u[k] - x[k] / c))
        })
        .collect();

    let rho_grid: Vec<f64> = nodes
        .iter()
        .map(|target| {
            let i = nearest(&dirs, target);
            geom.rho[i] + dot(rho_grad_at_dirs[i], sub(*target, dirs[i]))
        })
        .collect();
    let drho = grid.differentiate(&rho_grid)?;

    let h_grad_ambient: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let [e1, e2] = grid.frames()[i];
            let [g1, g2] = geom.grad[i];
            std::array::from_fn(|k| g1 * e1[k] + g2 * e2[k])
        })
        .collect();

    let mut max: f64 = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        let u = nodes[k];
        let [e1, e2] = grid.frames()[k];
        let [r1, r2] = drho.grad[k];
        let r = rho_grid[k];
        let grad_sq = r1 * r1 + r2 * r2;
        let norm = (r * r + grad_sq).sqrt();
        let h_rec = r * r / norm;
        let nu: [f64; 3] = std::array::from_fn(|c| (r * u[c] - r1 * e1[c] - r2 * e2[c]) / norm);
        let i = nearest(nodes, &nu);
        let h_ref = h.values()[i] + dot(h_grad_ambient[i], sub(nu, nodes[i]));
        let err = (h_rec - h_ref).abs();
        max = max.max(err);
        sum_sq += err * err;
    }
    Ok(RoundtripStats {
        max,
        rms: (sum_sq / n as f64).sqrt(),
    })
}

fn check_circle_monotone(dirs: &[[f64; 3]]) -> Result<()> {
    use std::f64::consts::{PI, TAU};
    let mut winding = 0.0;
    for i in 0..dirs.len() {
        let (a, b) = (dirs[i], dirs[(i + 1) % dirs.len()]);
        let mut step = b[1].atan2(b[0]) - a[1].atan2(a[0]);
        if step <= -PI {
            step += TAU;
        } else if step > PI {
            step -= TAU;
        }
        if step <= 0.0 {
            return Err(Error::NonInjectiveNormalMap);
        }
        winding += step;
    }
    if (winding - TAU).abs() > 1e-6 {
        return Err(Error::NonInjectiveNormalMap);
    }
    Ok(())
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn nearest(points: &[[f64; 3]], target: &[f64; 3]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, p) in points.iter().enumerate() {
        let c = dot(*p, *target);
        if c > best.0 {
            best = (c, i);
        }
    }
    best.1
}

/// An even "shape mode" on the sphere with unit sup-norm (up to sampling).
///
/// * `Cos(k)`: `cos(kθ)` with θ the polar angle on S¹ or the colatitude on S².
/// * `Harmonic { l, m }` (S² only): `P_l^{|m|}(cos θ)·cos(mφ)` for `m ≥ 0`,
///   `·sin(|m|φ)` for `m < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Cos(u32),
    Harmonic { l: u32, m: i32 },
}

impl Mode {
    pub fn is_even(&self) -> bool {
        match *self {
            Mode::Cos(k) => k % 2 == 0,
            Mode::Harmonic { l, .. } => l % 2 == 0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Mode::Harmonic { l, m } => {
                if dim != 2 {
                    return Err(Error::InvalidParameter(format!("{self} requires n = 2")));
                }
                if m.unsigned_abs() > l {
                    return Err(Error::InvalidParameter(format!("|m| > l in {self}")));
                }
            }
            Mode::Cos(_) => {}
        }
        if !self.is_even() {
            return Err(Error::NotEven);
        }
        Ok(())
    }

    /// Raw (unnormalized) value at the unit vector `x`.
    fn raw(&self, x: &[f64; 3], dim: usize) -> f64 {
        match *self {
            Mode::Cos(k) => {
                if dim == 1 {
                    complex_power(x[0], x[1], k).0
                } else {
                    chebyshev(k, x[2])
                }
            }
            Mode::Harmonic { l, m } => {
                let ma = m.unsigned_abs();
                let (re, im) = complex_power(x[0], x[1], ma);
                let azimuthal = if m >= 0 { re } else { im };
                azimuthal * legendre_stripped(l, ma, x[2])
            }
        }
    }

    fn norm(&self) -> f64 {
        match *self {
            Mode::Cos(_) => 1.0,
            Mode::Harmonic { l, m } => {
                let ma = m.unsigned_abs();
                let samples = 4001;
                (0..samples)
                    .map(|i| {
                        let z = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
                        let s = (1.0 - z * z).max(0.0).sqrt();
                        (s.powi(ma as i32) * legendre_stripped(l, ma, z)).abs()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Samples the unit-sup-norm mode on a grid.
    pub fn sample(&self, grid: &SphereGrid) -> Vec<f64> {
        let norm = self.norm();
        grid.sample(|x| self.raw(x, grid.dim()) / norm)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Cos(k) => write!(f, "cos({k}θ)"),
            Mode::Harmonic { l, m } => write!(f, "Y({l},{m})"),
        }
    }
}

/// `(x + iy)^k` computed by repeated multiplication (sign-symmetric).
fn complex_power(x: f64, y: f64, k: u32) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..k {
        (re, im) = (re * x - im * y, re * y + im * x);
    }
    (re, im)
}

fn chebyshev(k: u32, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, z);
    if k == 0 {
        return 1.0;
    }
    for _ in 1..k {
        (prev, cur) = (cur, 2.0 * z * cur - prev);
    }
    cur
}

/// `P_l^m(z) / (1 - z²)^{m/2}` by the upward recurrence in l.
fn legendre_stripped(l: u32, m: u32, z: f64) -> f64 {
    let mut pmm = 1.0;
    for i in 0..m {
        pmm *= (2 * i + 1) as f64;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = z * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * z * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed-form reference bodies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticBody {
    Ball { radius: f64 },
    Ellipsoid { semi_axes: Vec<f64> },
    PerturbedBall { amplitude: f64, mode: ModeSpec },
}

/// Serialized form of a [`Mode`]: `"cos(2θ)"`, `"Y(2,1)"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModeSpec(pub Mode);

impl TryFrom<String> for ModeSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse::<Mode>().map(ModeSpec)
    }
}

impl From<ModeSpec> for String {
    fn from(m: ModeSpec) -> Self {
        m.0.to_string()
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("unrecognized mode `{s}`"));
        if let Some(inner) = t.strip_prefix("cos(").and_then(|r| r.strip_suffix(')')) {
            let inner = inner
                .strip_suffix("θ")
                .or_else(|| inner.strip_suffix("theta"))
                .ok_or_else(bad)?;
            let inner = inner.strip_suffix('*').unwrap_or(inner);
            let k = if inner.is_empty() { 1 } else { inner.parse().map_err(|_| bad())? };
            return Ok(Mode::Cos(k));
        }
        if let Some(inner) = t.strip_prefix("Y(").and_then(|r| r.strip_suffix(')')) {
            let (l, m) = inner.split_once(',').ok_or_else(bad)?;
            return Ok(Mode::Harmonic {
                l: l.parse().map_err(|_| bad())?,
                m: m.parse().map_err(|_| bad())?,
            });
        }
        Err(bad())
    }
}

impl AnalyticBody {
    pub fn ellipse(a: f64, b: f64) -> Self {
        AnalyticBody::Ellipsoid {
            semi_axes: vec![a, b],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            AnalyticBody::Ball { radius } if *radius > 0.0 => Ok(()),
            AnalyticBody::Ellipsoid { semi_axes }
                if semi_axes.len() == dim + 1 && semi_axes.iter().all(|&a| a > 0.0) =>
            {
                Ok(())
            }
            AnalyticBody::PerturbedBall { amplitude, mode } if amplitude.is_finite() => {
                mode.0.validate(dim)
            }
            _ => Err(Error::InvalidParameter(format!("{self:?} for n = {dim}"))),
        }
    }

    /// Closed-form `h(x)`.
    pub fn support_at(&self, x: &[f64; 3], dim: usize) -> f64 {
        match self {
            AnalyticBody::Ball { radius } => *radius,
            AnalyticBody::Ellipsoid { semi_axes } => semi_axes
                .iter()
                .zip(x.iter().take(dim + 1))
                .map(|(a, xi)| a * a * xi * xi)
                .sum::<f64>()
                .sqrt(),
            AnalyticBody::PerturbedBall { amplitude, mode } => {
                1.0 + amplitude * mode.0.raw(x, dim) / mode.0.norm()
            }
        }
    }

    /// Closed-form dual curvature density `h σ_n |Dh|^{q-n-1}` at the normal `x`,
    /// available for balls and ellipsoids.
    ///
    /// For semi-axes `a_i`: `σ_n = Π a_i² / h^{n+2}` and `|Dh|² = Σ a_i⁴ x_i² / h²`.
    pub fn exact_dual_density(&self, x: &[f64; 3], dim: usize, q: f64) -> Option<f64> {
        let axes: Vec<f64> = match self {
            AnalyticBody::Ball { radius } => vec![*radius; dim + 1],
            AnalyticBody::Ellipsoid { semi_axes } => semi_axes.clone(),
            AnalyticBody::PerturbedBall { .. } => return None,
        };
        let h = self.support_at(x, dim);
        let prod: f64 = axes.iter().map(|a| a * a).product();
        let sigma_n = prod / h.powi(dim as i32 + 2);
        let rho = (axes
            .iter()
            .zip(x.iter())
            .map(|(a, xi)| a.powi(4) * xi * xi)
            .sum::<f64>())
        .sqrt()
            / h;
        Some(h * sigma_n * rho.powf(q - dim as f64 - 1.0))
    }
}

/// Samples a closed-form body on the grid. Perturbed balls are rejected when
/// the sampled body is not strictly convex.
pub fn analytic_support(body: &AnalyticBody, grid: Arc<SphereGrid>) -> Result<SupportFunction> {
    let dim = grid.dim();
    body.validate(dim)?;
    let values = match body {
        AnalyticBody::PerturbedBall { amplitude, mode } => mode
            .0
            .sample(&grid)
            .into_iter()
            .map(|m| 1.0 + amplitude * m)
            .collect(),
        _ => grid.sample(|x| body.support_at(x, dim)),
    };
    let h = SupportFunction::new(grid, values)?;
    if matches!(body, AnalyticBody::PerturbedBall { .. }) {
        h.geometry().require_valid()?;
    }
    Ok(h)
}

impl fmt::Display for AnalyticBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        match self {
            AnalyticBody::Ball { radius } => write!(f, "ball({radius})"),
            AnalyticBody::Ellipsoid { semi_axes } if semi_axes.len() == 2 => {
                write!(f, "ellipse({})", join(semi_axes))
            }
            AnalyticBody::Ellipsoid { semi_axes } => write!(f, "ellipsoid({})", join(semi_axes)),
            AnalyticBody::PerturbedBall { amplitude, mode } => {
                write!(f, "perturbed({amplitude},{})", mode.0)
            }
        }
    }
}

impl std::str::FromStr for AnalyticBody {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("unrecognized body `{s}`"));
        let (name, rest) = t.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|a| a.parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        match name {
            "ball" => match nums()?.as_slice() {
                [r] => Ok(AnalyticBody::Ball { radius: *r }),
                _ => Err(bad()),
            },
            "ellipse" | "ellipsoid" => Ok(AnalyticBody::Ellipsoid { semi_axes: nums()? }),
            "perturbed" => {
                let (amp, mode) = args.split_once(',').ok_or_else(bad)?;
                Ok(AnalyticBody::PerturbedBall {
                    amplitude: amp.parse().map_err(|_| bad())?,
                    mode: ModeSpec(mode.parse()?),
                })
            }
            _ => Err(bad()),
        }
    }
}
