//! Discretized unit spheres S¹ and S² with quadrature, tangential
//! differential operators and antipodal pairing.
//!
//! Node order is fixed by [`SphereGrid::build`]:
//! * S¹: node `j` sits at angle `θ_j = 2πj/N`.
//! * S²: node `j * n_lon + k` sits at colatitude `θ_j = (j + 1/2)π/n_lat`
//!   and longitude `φ_k = 2πk/n_lon`.
//!
//! Both grids are built so that `node[antipode[i]] == -node[i]` bit-for-bit.

mod fourier;
mod ops;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ops::{Derivatives, DiffOperators, Stencil};

/// Grid-size descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub enum Resolution {
    Circle { n: usize },
    Sphere { n_lat: usize, n_lon: usize },
}

impl Resolution {
    pub fn dim(&self) -> usize {
        match self {
            Resolution::Circle { .. } => 1,
            Resolution::Sphere { .. } => 2,
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            Resolution::Circle { n } => n,
            Resolution::Sphere { n_lat, n_lon } => n_lat * n_lon,
        }
    }

    /// The same grid with every dimension doubled.
    pub fn refined(&self) -> Self {
        match *self {
            Resolution::Circle { n } => Resolution::Circle { n: 2 * n },
            Resolution::Sphere { n_lat, n_lon } => Resolution::Sphere {
                n_lat: 2 * n_lat,
                n_lon: 2 * n_lon,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Resolution::Circle { n } => {
                if n % 2 != 0 {
                    return Err(Error::InvalidResolution(format!(
                        "odd resolution N = {n} has no antipodal pairing"
                    )));
                }
                if n < 16 {
                    return Err(Error::InvalidResolution(format!("N = {n} below minimum 16")));
                }
            }
            Resolution::Sphere { n_lat, n_lon } => {
                if n_lon % 2 != 0 {
                    return Err(Error::InvalidResolution(format!(
                        "odd longitude count {n_lon} has no antipodal pairing"
                    )));
                }
                if n_lat < 8 || n_lon < 16 {
                    return Err(Error::InvalidResolution(format!(
                        "{n_lat}x{n_lon} below minimum 8x16"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Resolution {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        match v.as_slice() {
            [n] => Ok(Resolution::Circle { n: *n }),
            [n_lat, n_lon] => Ok(Resolution::Sphere {
                n_lat: *n_lat,
                n_lon: *n_lon,
            }),
            _ => Err(Error::InvalidResolution(format!(
                "expected [N] or [n_lat, n_lon], got {v:?}"
            ))),
        }
    }
}

impl From<Resolution> for Vec<usize> {
    fn from(r: Resolution) -> Self {
        match r {
            Resolution::Circle { n } => vec![n],
            Resolution::Sphere { n_lat, n_lon } => vec![n_lat, n_lon],
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Circle { n } => write!(f, "{n}"),
            Resolution::Sphere { n_lat, n_lon } => write!(f, "{n_lat}x{n_lon}"),
        }
    }
}

/// Parses `"256"` or `"32x64"`.
impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidResolution(format!("cannot parse `{s}`"));
        let sizes = s
            .trim()
            .split('x')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Resolution::try_from(sizes)
    }
}

/// A discretized S^n, n ∈ {1, 2}. Immutable after construction.
#[derive(Debug)]
pub struct SphereGrid {
    resolution: Resolution,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    antipode: Vec<usize>,
    /// Orthonormal tangent frame per node; the second vector is zero on S¹.
    frames: Vec<[[f64; 3]; 2]>,
    ops: DiffOperators,
    even_reps: Vec<usize>,
    even_index: Vec<usize>,
}

impl SphereGrid {
    pub fn build(resolution: Resolution) -> Result<Self> {
        resolution.validate()?;
        let (nodes, weights, antipode, frames, ops) = match resolution {
            Resolution::Circle { n } => build_circle(n),
            Resolution::Sphere { n_lat, n_lon } => build_sphere(n_lat, n_lon),
        };
        let mut even_reps = Vec::with_capacity(nodes.len() / 2);
        let mut even_index = vec![usize::MAX; nodes.len()];
        for (i, &a) in antipode.iter().enumerate() {
            if i < a {
                even_index[i] = even_reps.len();
                even_index[a] = even_reps.len();
                even_reps.push(i);
            }
        }
        Ok(Self {
            resolution,
            nodes,
            weights,
            antipode,
            frames,
            ops,
            even_reps,
            even_index,
        })
    }

    /// Convenience constructor from `dim` and the raw size list.
    pub fn with_dim(dim: usize, sizes: &[usize]) -> Result<Self> {
        let res = Resolution::try_from(sizes.to_vec())?;
        if res.dim() != dim {
            return Err(Error::InvalidResolution(format!(
                "dimension {dim} does not match resolution {sizes:?}"
            )));
        }
        Self::build(res)
    }

    pub fn dim(&self) -> usize {
        self.resolution.dim()
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn antipode(&self) -> &[usize] {
        &self.antipode
    }

    pub fn frames(&self) -> &[[[f64; 3]; 2]] {
        &self.frames
    }

    pub fn operators(&self) -> &DiffOperators {
        &self.ops
    }

    /// |S^n|: 2π or 4π.
    pub fn area(&self) -> f64 {
        match self.dim() {
            1 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }

    /// One representative node per antipodal pair (the lower index).
    pub fn even_reps(&self) -> &[usize] {
        &self.even_reps
    }

    /// For every node, the position of its pair in [`Self::even_reps`].
    pub fn even_index(&self) -> &[usize] {
        &self.even_index
    }

    /// Extends values given on the representatives to an even node field.
    pub fn extend_even(&self, reduced: &[f64]) -> Vec<f64> {
        self.even_index.iter().map(|&r| reduced[r]).collect()
    }

    pub fn restrict_even(&self, values: &[f64]) -> Vec<f64> {
        self.even_reps.iter().map(|&i| values[i]).collect()
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(())
    }

    /// Quadrature Σ w_j v_j.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// Mean value ⨍ v dσ.
    pub fn mean(&self, values: &[f64]) -> Result<f64> {
        Ok(self.integrate(values)? / self.area())
    }

    pub fn differentiate(&self, values: &[f64]) -> Result<Derivatives> {
        self.check_len(values)?;
        Ok(self.ops.differentiate(values))
    }

    /// Antipodal average `(v[i] + v[antipode[i]]) / 2`.
    pub fn project_even(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values)?;
        Ok(self
            .antipode
            .iter()
            .enumerate()
            .map(|(i, &a)| 0.5 * (values[i] + values[a]))
            .collect())
    }

    pub fn is_even(&self, values: &[f64]) -> bool {
        values.len() == self.len()
            && self
                .antipode
                .iter()
                .enumerate()
                .all(|(i, &a)| values[i] == values[a])
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    /// Angle coordinates of node `i`: `(θ, 0)` on S¹, `(colatitude, longitude)` on S².
    pub fn angles(&self, i: usize) -> (f64, f64) {
        match self.resolution {
            Resolution::Circle { n } => (2.0 * PI * i as f64 / n as f64, 0.0),
            Resolution::Sphere { n_lat, n_lon } => {
                let (j, k) = (i / n_lon, i % n_lon);
                (
                    (j as f64 + 0.5) * PI / n_lat as f64,
                    2.0 * PI * k as f64 / n_lon as f64,
                )
            }
        }
    }
}

type GridParts = (
    Vec<[f64; 3]>,
    Vec<f64>,
    Vec<usize>,
    Vec<[[f64; 3]; 2]>,
    DiffOperators,
);

/// `(cos, sin)` of `2πk/m`, with the second half negated from the first so
/// that opposite angles are exact negatives.
fn unit_circle_table(m: usize) -> Vec<(f64, f64)> {
    let half = m / 2;
    let mut table = Vec::with_capacity(m);
    for k in 0..half {
        let a = 2.0 * PI * k as f64 / m as f64;
        table.push((a.cos(), a.sin()));
    }
    for k in 0..half {
        let (c, s) = table[k];
        table.push((-c, -s));
    }
    table
}

fn build_circle(n: usize) -> GridParts {
    let table = unit_circle_table(n);
    let nodes = table.iter().map(|&(c, s)| [c, s, 0.0]).collect();
    let frames = table
        .iter()
        .map(|&(c, s)| [[-s, c, 0.0], [0.0; 3]])
        .collect();
    let weights = vec![2.0 * PI / n as f64; n];
    let antipode = (0..n).map(|i| (i + n / 2) % n).collect();
    (nodes, weights, antipode, frames, DiffOperators::circle(n))
}

fn build_sphere(n_lat: usize, n_lon: usize) -> GridParts {
    // colatitude cos/sin mirrored about the equator
    let mut cos_t = vec![0.0; n_lat];
    let mut sin_t = vec![0.0; n_lat];
    for j in 0..n_lat.div_ceil(2) {
        let t = (j as f64 + 0.5) * PI / n_lat as f64;
        let (c, s) = if 2 * j + 1 == n_lat { (0.0, 1.0) } else { (t.cos(), t.sin()) };
        cos_t[j] = c;
        sin_t[j] = s;
        cos_t[n_lat - 1 - j] = -c;
        sin_t[n_lat - 1 - j] = s;
    }
    let lon = unit_circle_table(n_lon);
    let fejer = fourier::fejer_weights(n_lat);
    let dphi = 2.0 * PI / n_lon as f64;

    let total = n_lat * n_lon;
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut antipode = Vec::with_capacity(total);
    let mut frames = Vec::with_capacity(total);
    for j in 0..n_lat {
        for (k, &(cp, sp)) in lon.iter().enumerate() {
            let (ct, st) = (cos_t[j], sin_t[j]);
            nodes.push([st * cp, st * sp, ct]);
            weights.push(fejer[j] * dphi);
            antipode.push((n_lat - 1 - j) * n_lon + (k + n_lon / 2) % n_lon);
            frames.push([[ct * cp, ct * sp, -st], [-sp, cp, 0.0]]);
        }
    }
    let ops = DiffOperators::sphere(n_lat, n_lon, &sin_t, &cos_t);
    (nodes, weights, antipode, frames, ops)
}
