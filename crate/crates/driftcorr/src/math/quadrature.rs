//! Gaussian quadrature rules computed by Newton iteration on the
//! orthogonal-polynomial recurrences.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Legendre polynomial value and first derivative at `x`.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = pk;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on [-1, 1]. Nodes ascending, weights sum to 2.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("quadrature order must be positive".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-angle initial guess for the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let (p, d) = legendre_eval(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() <= NEWTON_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerics(format!(
                    "Legendre root {i} of order {n} did not converge"
                )));
            }
            // One polishing step with the final derivative.
            let (p, d) = legendre_eval(n, x);
            x -= p / d;
            let w = 2.0 / ((1.0 - x * x) * d * d);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            nodes[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    /// Rule mapped onto [a, b]; weights sum to b - a.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
/// Nodes ascending; weights sum to sqrt(pi).
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("quadrature order must be positive".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        let mut roots: Vec<f64> = Vec::with_capacity(m);
        for i in 0..m {
            // Initial guesses descending from the largest root.
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * roots[0],
                3 => 1.91 * z - 0.91 * roots[1],
                _ => 2.0 * z - roots[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                // Orthonormal Hermite recurrence.
                let mut p1 = PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= NEWTON_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerics(format!(
                    "Hermite root {i} of order {n} did not converge"
                )));
            }
            roots.push(z);
            let w = 2.0 / (pp * pp);
            nodes[n - 1 - i] = z;
            weights[n - 1 - i] = w;
            nodes[i] = -z;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    /// Nodes and probability weights for expectations against a standard
    /// normal: E[f(Z)] ~ sum p_i f(z_i), with the p_i summing to one.
    pub fn standard_normal(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let norm = 1.0 / PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (x * std::f64::consts::SQRT_2, w * norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn legendre_two_point_rule() {
        let gl = GaussLegendre::new(2).unwrap();
        let mapped: Vec<(f64, f64)> = gl.mapped(0.0, 1.0).collect();
        assert_abs_diff_eq!(mapped[0].0, 0.21132486540518712, epsilon = 1e-15);
        assert_abs_diff_eq!(mapped[1].0, 0.78867513459481288, epsilon = 1e-15);
        assert_abs_diff_eq!(mapped[0].1, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mapped[1].1, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn legendre_weight_sums() {
        for n in [1, 2, 3, 5, 8, 13, 24, 48, 64] {
            let gl = GaussLegendre::new(n).unwrap();
            let sum: f64 = gl.weights.iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-13);
            for w in &gl.weights {
                assert!(*w > 0.0);
            }
            for i in 1..n {
                assert!(gl.nodes[i] > gl.nodes[i - 1]);
            }
        }
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        // Degree 2n-1 polynomials integrate exactly.
        let gl = GaussLegendre::new(5).unwrap();
        // integral of x^9 over [0,2] = 2^10/10 = 102.4
        let est: f64 = gl.mapped(0.0, 2.0).map(|(x, w)| w * x.powi(9)).sum();
        assert_abs_diff_eq!(est, 102.4, epsilon = 1e-10);
    }

    #[test]
    fn hermite_moments() {
        for n in [1, 3, 8, 20, 24, 40] {
            let gh = GaussHermite::new(n).unwrap();
            let wsum: f64 = gh.weights.iter().sum();
            assert_abs_diff_eq!(wsum, PI.sqrt(), epsilon = 1e-12);
            let psum: f64 = gh.standard_normal().map(|(_, p)| p).sum();
            assert_abs_diff_eq!(psum, 1.0, epsilon = 1e-12);
            if n >= 2 {
                let m2: f64 = gh.standard_normal().map(|(z, p)| p * z * z).sum();
                assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-11);
            }
            if n >= 3 {
                let m4: f64 = gh.standard_normal().map(|(z, p)| p * z.powi(4)).sum();
                assert_abs_diff_eq!(m4, 3.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn hermite_integrates_gaussian_expectations() {
        // E[exp(aZ)] = exp(a^2/2)
        let gh = GaussHermite::new(32).unwrap();
        for a in [0.3, 1.0, 2.0] {
            let est: f64 = gh.standard_normal().map(|(z, p)| p * (a * z).exp()).sum();
            assert_abs_diff_eq!(est, (0.5 * a * a).exp(), epsilon = 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn legendre_integrates_random_cubics(
            c0 in -2.0f64..2.0, c1 in -2.0f64..2.0,
            c2 in -2.0f64..2.0, c3 in -2.0f64..2.0,
            a in -3.0f64..0.0, len in 0.1f64..4.0,
        ) {
            let b = a + len;
            let gl = GaussLegendre::new(2).unwrap();
            let est: f64 = gl.mapped(a, b)
                .map(|(x, w)| w * (c0 + x * (c1 + x * (c2 + x * c3))))
                .sum();
            let prim = |x: f64| c0 * x + c1 * x * x / 2.0 + c2 * x.powi(3) / 3.0 + c3 * x.powi(4) / 4.0;
            let exact = prim(b) - prim(a);
            prop_assert!((est - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        }
    }
}
