//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Deliberately hand-rolled: the engine factorizes small correlation
//! matrices (d <= 10ish) and needs bit-reproducible output with a fixed
//! ordering and sign convention, which is easier to guarantee here than to
//! extract from a general-purpose linear algebra backend.

use crate::error::{Error, Result};

/// Eigenvalues (descending) and matching eigenvectors (columns, row-major
/// `n x n`) of a symmetric matrix given in row-major order.
///
/// Ties in the eigenvalues keep the sweep order, so a diagonal input returns
/// the standard basis unchanged. Each eigenvector is oriented so its largest
/// magnitude entry is positive.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::InvalidParam("matrix size mismatch".into()));
    }
    for p in 0..n {
        for q in (p + 1)..n {
            if (a[p * n + q] - a[q * n + p]).abs() > 1e-12 {
                return Err(Error::InvalidParam("matrix is not symmetric".into()));
            }
        }
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);

    let mut converged = false;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q] * m[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerics("Jacobi sweep did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vals = vec![0.0; n];
    let mut vecs = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = m[src * n + src];
        let mut imax = 0;
        let mut amax = -1.0;
        for k in 0..n {
            let av = v[k * n + src].abs();
            if av > amax {
                amax = av;
                imax = k;
            }
        }
        let flip = if v[imax * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vecs[k * n + dst] = flip * v[k * n + src];
        }
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_is_fixed_point() {
        let a = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let (vals, vecs) = sym_eigen(&a, 3).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
        assert_eq!(vecs, a);
    }

    #[test]
    fn equicorrelated_three_by_three() {
        let r = 0.4;
        let a = vec![1.0, r, r, r, 1.0, r, r, r, 1.0];
        let (vals, _) = sym_eigen(&a, 3).unwrap();
        assert_abs_diff_eq!(vals[0], 1.8, epsilon = 1e-13);
        assert_abs_diff_eq!(vals[1], 0.6, epsilon = 1e-13);
        assert_abs_diff_eq!(vals[2], 0.6, epsilon = 1e-13);
    }

    #[test]
    fn reconstructs_input() {
        let a = vec![
            2.0, 0.5, -0.3, //
            0.5, 1.5, 0.2, //
            -0.3, 0.2, 0.8,
        ];
        let (vals, vecs) = sym_eigen(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k];
                }
                assert_abs_diff_eq!(s, a[i * 3 + j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let a = vec![1.0, 0.2, 0.0, 1.0];
        assert!(sym_eigen(&a, 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn eigenpairs_satisfy_definition(seed_vals in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let n = 4;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let x = seed_vals[i * n + j];
                    a[i * n + j] += 0.5 * x;
                    a[j * n + i] += 0.5 * x;
                }
            }
            let (vals, vecs) = sym_eigen(&a, n).unwrap();
            let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            for e in 0..n {
                for i in 0..n {
                    let mut av = 0.0;
                    for j in 0..n {
                        av += a[i * n + j] * vecs[j * n + e];
                    }
                    prop_assert!((av - vals[e] * vecs[i * n + e]).abs() <= 1e-9 * (1.0 + norm));
                }
            }
            // eigenvectors orthonormal
            for e in 0..n {
                for f in 0..n {
                    let dot: f64 = (0..n).map(|k| vecs[k * n + e] * vecs[k * n + f]).sum();
                    let want = if e == f { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() <= 1e-10);
                }
            }
        }
    }
}
