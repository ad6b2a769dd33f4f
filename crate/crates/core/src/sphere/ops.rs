//! Tangential derivatives in the fixed analytic frame.
//!
//! S¹ uses Fourier collocation on the periodic grid. S² uses a double
//! Fourier scheme: θ-derivatives are taken along full great-circle meridians
//! (the meridian through longitude φ continues over the pole at φ + π), and
//! φ-derivatives along latitude rings. Both are spectrally accurate on
//! smooth functions.

use super::fourier::PeriodicWeights;

/// Sparse linear operator with zero row sums, stored as off-diagonal
/// entries only and applied as `(Sv)_i = Σ_j w_ij (v_j - v_i)`.
///
/// The difference form makes constants map to exactly zero.
#[derive(Clone, Debug)]
pub struct Stencil {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Stencil {
    fn from_rows(rows: impl IntoIterator<Item = Vec<(usize, f64)>>) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, w) in row {
                cols.push(c);
                vals.push(w);
            }
            offsets.push(cols.len());
        }
        Self {
            offsets,
            cols,
            vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Off-diagonal entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Implied diagonal entry `-Σ_j w_ij`.
    pub fn diagonal(&self, i: usize) -> f64 {
        -self.row(i).map(|(_, w)| w).sum::<f64>()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|i| {
                let vi = v[i];
                self.row(i).map(|(j, w)| w * (v[j] - vi)).sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum DiffOperators {
    Circle {
        d1: Stencil,
        d2: Stencil,
    },
    Sphere {
        d_theta: Stencil,
        d_theta2: Stencil,
        d_phi: Stencil,
        d_phi2: Stencil,
        /// sin θ and cot θ per node.
        sin: Vec<f64>,
        cot: Vec<f64>,
    },
}

/// Tangential gradient, covariant Hessian and Laplacian at every node,
/// expressed in the grid's tangent frame. On S¹ only the first component of
/// `grad` and `hess[0]` are used.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub grad: Vec<[f64; 2]>,
    /// `[h11, h12, h22]`.
    pub hess: Vec<[f64; 3]>,
    pub laplacian: Vec<f64>,
}

impl DiffOperators {
    pub(crate) fn circle(n: usize) -> Self {
        let w = PeriodicWeights::new(n);
        let build = |table: &[f64]| {
            Stencil::from_rows((0..n).map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, table[(i + n - j) % n]))
                    .collect()
            }))
        };
        DiffOperators::Circle {
            d1: build(&w.first),
            d2: build(&w.second),
        }
    }

    pub(crate) fn sphere(n_lat: usize, n_lon: usize, sin_t: &[f64], cos_t: &[f64]) -> Self {
        let meridian_len = 2 * n_lat;
        let wm = PeriodicWeights::new(meridian_len);
        let wr = PeriodicWeights::new(n_lon);
        // node at position m of the meridian through longitude k
        let meridian_node = |m: usize, k: usize| {
            if m < n_lat {
                m * n_lon + k
            } else {
                (meridian_len - 1 - m) * n_lon + (k + n_lon / 2) % n_lon
            }
        };
        let merid = |table: &[f64]| {
            Stencil::from_rows((0..n_lat * n_lon).map(|i| {
                let (j, k) = (i / n_lon, i % n_lon);
                (0..meridian_len)
                    .filter(|&m| m != j)
                    .map(|m| (meridian_node(m, k), table[(j + meridian_len - m) % meridian_len]))
                    .collect()
            }))
        };
        let ring = |table: &[f64]| {
            Stencil::from_rows((0..n_lat * n_lon).map(|i| {
                let (j, k) = (i / n_lon, i % n_lon);
                (0..n_lon)
                    .filter(|&kk| kk != k)
                    .map(|kk| (j * n_lon + kk, table[(k + n_lon - kk) % n_lon]))
                    .collect()
            }))
        };
        let mut sin = Vec::with_capacity(n_lat * n_lon);
        let mut cot = Vec::with_capacity(n_lat * n_lon);
        for j in 0..n_lat {
            for _ in 0..n_lon {
                sin.push(sin_t[j]);
                cot.push(cos_t[j] / sin_t[j]);
            }
        }
        DiffOperators::Sphere {
            d_theta: merid(&wm.first),
            d_theta2: merid(&wm.second),
            d_phi: ring(&wr.first),
            d_phi2: ring(&wr.second),
            sin,
            cot,
        }
    }

    pub fn differentiate(&self, v: &[f64]) -> Derivatives {
        match self {
            DiffOperators::Circle { d1, d2 } => {
                let g = d1.apply(v);
                let h = d2.apply(v);
                Derivatives {
                    grad: g.iter().map(|&x| [x, 0.0]).collect(),
                    hess: h.iter().map(|&x| [x, 0.0, 0.0]).collect(),
                    laplacian: h,
                }
            }
            DiffOperators::Sphere {
                d_theta,
                d_theta2,
                d_phi,
                d_phi2,
                sin,
                cot,
            } => {
                let t = d_theta.apply(v);
                let tt = d_theta2.apply(v);
                let p = d_phi.apply(v);
                let pp = d_phi2.apply(v);
                // φ-derivative is a smooth scalar field, so it can be carried
                // over the pole by the meridian stencil.
                let tp = d_theta.apply(&p);
                let mut grad = Vec::with_capacity(v.len());
                let mut hess = Vec::with_capacity(v.len());
                let mut laplacian = Vec::with_capacity(v.len());
                for i in 0..v.len() {
                    let (s, c) = (sin[i], cot[i]);
                    let h11 = tt[i];
                    let h12 = (tp[i] - c * p[i]) / s;
                    let h22 = pp[i] / (s * s) + c * t[i];
                    grad.push([t[i], p[i] / s]);
                    hess.push([h11, h12, h22]);
                    laplacian.push(h11 + h22);
                }
                Derivatives {
                    grad,
                    hess,
                    laplacian,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::sphere::{Resolution, SphereGrid};

    fn circle(n: usize) -> SphereGrid {
        SphereGrid::build(Resolution::Circle { n }).unwrap()
    }

    fn sphere(n_lat: usize, n_lon: usize) -> SphereGrid {
        SphereGrid::build(Resolution::Sphere { n_lat, n_lon }).unwrap()
    }

    fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
        v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn constants_have_exactly_zero_derivatives() {
        for g in [circle(32), sphere(8, 16)] {
            let d = g.differentiate(&vec![1.0; g.len()]).unwrap();
            assert!(d.grad.iter().all(|x| *x == [0.0, 0.0]));
            assert!(d.hess.iter().all(|x| *x == [0.0, 0.0, 0.0]));
            assert!(d.laplacian.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn circle_eigenfunctions() {
        let g = circle(64);
        for k in [1usize, 2, 5, 12] {
            let v: Vec<f64> = (0..64).map(|j| (k as f64 * g.angles(j).0).cos()).collect();
            let d = g.differentiate(&v).unwrap();
            let err = max_abs(d.laplacian.iter().zip(&v).map(|(l, x)| l + (k * k) as f64 * x));
            assert!(err < 1e-10 * (k * k) as f64, "k = {k}: {err}");
            let gerr = max_abs((0..64).map(|j| {
                d.grad[j][0] + k as f64 * (k as f64 * g.angles(j).0).sin()
            }));
            assert!(gerr < 1e-11 * k as f64);
        }
    }

    #[test]
    fn sphere_harmonics_are_laplacian_eigenfunctions() {
        let g = sphere(16, 32);
        // degree-2 and degree-3 harmonics in Cartesian form
        let cases: [(f64, fn(&[f64; 3]) -> f64); 4] = [
            (2.0, |x| 3.0 * x[2] * x[2] - 1.0),
            (2.0, |x| x[0] * x[1]),
            (2.0, |x| x[1] * x[2]),
            (3.0, |x| x[0] * (x[0] * x[0] - 3.0 * x[1] * x[1])),
        ];
        for (k, f) in cases {
            let v = g.sample(f);
            let d = g.differentiate(&v).unwrap();
            let err = max_abs(d.laplacian.iter().zip(&v).map(|(l, x)| l + k * (k + 1.0) * x));
            assert!(err < 1e-10, "degree {k}: {err}");
        }
    }

    #[test]
    fn sphere_hessian_of_linear_function() {
        // for u = <x, v> the covariant Hessian is -u·I and the gradient is the
        // tangential projection of v
        let g = sphere(12, 24);
        let v = [0.3, -0.5, 0.8];
        let u = g.sample(|x| x[0] * v[0] + x[1] * v[1] + x[2] * v[2]);
        let d = g.differentiate(&u).unwrap();
        for i in 0..g.len() {
            let [e1, e2] = g.frames()[i];
            let dot = |a: [f64; 3]| a[0] * v[0] + a[1] * v[1] + a[2] * v[2];
            assert!((d.grad[i][0] - dot(e1)).abs() < 1e-11);
            assert!((d.grad[i][1] - dot(e2)).abs() < 1e-11);
            assert!((d.hess[i][0] + u[i]).abs() < 1e-10);
            assert!(d.hess[i][1].abs() < 1e-10);
            assert!((d.hess[i][2] + u[i]).abs() < 1e-10);
        }
    }
}
