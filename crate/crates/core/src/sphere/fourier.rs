//! Periodic Fourier-collocation weights and the Fejér latitude rule.

use std::f64::consts::PI;

/// Off-diagonal entries of the first- and second-derivative Fourier
/// collocation matrices on `m` equispaced points of a 2π-periodic grid.
///
/// Returned as functions of the index offset `d = i - j (mod m)`, `d != 0`.
/// `m` must be even. Diagonals are omitted: the rows sum to zero, and the
/// stencils are always applied in difference form.
pub(crate) struct PeriodicWeights {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl PeriodicWeights {
    pub fn new(m: usize) -> Self {
        debug_assert!(m % 2 == 0 && m >= 2);
        let step = 2.0 * PI / m as f64;
        let mut first = vec![0.0; m];
        let mut second = vec![0.0; m];
        for d in 1..m {
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            let half = 0.5 * d as f64 * step;
            let s = half.sin();
            first[d] = 0.5 * sign * half.cos() / s;
            second[d] = -0.5 * sign / (s * s);
        }
        // Enforce the exact antisymmetry/symmetry of the offset tables so
        // derivatives of mirrored data mirror bit-for-bit.
        for d in 1..m / 2 {
            first[m - d] = -first[d];
            second[m - d] = second[d];
        }
        first[m / 2] = 0.0;
        Self { first, second }
    }
}

/// Fejér's first rule on `cos θ_j`, `θ_j = (j + 1/2)π/count`, for
/// `∫_{-1}^{1} g(μ) dμ`. Exact for polynomials of degree `< count`.
pub(crate) fn fejer_weights(count: usize) -> Vec<f64> {
    let n = count as f64;
    let mut w: Vec<f64> = (0..count)
        .map(|j| {
            let theta = (j as f64 + 0.5) * PI / n;
            let tail: f64 = (1..=count / 2)
                .map(|k| {
                    let k = k as f64;
                    (2.0 * k * theta).cos() / (4.0 * k * k - 1.0)
                })
                .sum();
            2.0 / n * (1.0 - 2.0 * tail)
        })
        .collect();
    for j in 0..count / 2 {
        w[count - 1 - j] = w[j];
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_integrates_low_degree_polynomials() {
        let count = 12;
        let w = fejer_weights(count);
        let nodes: Vec<f64> = (0..count)
            .map(|j| ((j as f64 + 0.5) * PI / count as f64).cos())
            .collect();
        for deg in 0..count {
            let approx: f64 = nodes.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-14, "degree {deg}: {approx} vs {exact}");
        }
    }

    #[test]
    fn first_derivative_of_sine() {
        let m = 16;
        let wts = PeriodicWeights::new(m);
        let step = 2.0 * PI / m as f64;
        let v: Vec<f64> = (0..m).map(|j| (3.0 * j as f64 * step).sin()).collect();
        for i in 0..m {
            let d: f64 = (0..m)
                .filter(|&j| j != i)
                .map(|j| wts.first[(i + m - j) % m] * (v[j] - v[i]))
                .sum();
            assert!((d - 3.0 * (3.0 * i as f64 * step).cos()).abs() < 1e-12);
        }
    }
}
