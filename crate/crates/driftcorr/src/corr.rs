//! Factor loadings for correlated Brownian drivers.

use crate::error::{Error, Result};
use crate::math::eigen::sym_eigen;

/// Matrix `C` (d x r, row-major) with `C C^T` equal to the asset correlation
/// matrix. Columns are eigenvector directions scaled by the square root of
/// their eigenvalues; eigenvalues below the rank cutoff are dropped, so
/// degenerate correlation structures simulate with fewer factors.
#[derive(Clone, Debug)]
pub struct FactorLoadings {
    d: usize,
    r: usize,
    c: Vec<f64>,
}

const RANK_CUTOFF: f64 = 1e-12;
const PSD_TOLERANCE: f64 = -1e-8;

pub fn equicorrelation(d: usize, rho: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { rho }).collect())
        .collect()
}

impl FactorLoadings {
    pub fn from_correlation(rho: &[Vec<f64>]) -> Result<Self> {
        let d = rho.len();
        if d == 0 {
            return Err(Error::InvalidParam("empty correlation matrix".into()));
        }
        let mut flat = vec![0.0; d * d];
        for (i, row) in rho.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidParam("correlation matrix is not square".into()));
            }
            if (row[i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParam("correlation diagonal must be one".into()));
            }
            for (j, &x) in row.iter().enumerate() {
                if x.abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidParam("correlation entries must lie in [-1, 1]".into()));
                }
                flat[i * d + j] = x;
            }
        }
        let (vals, vecs) = sym_eigen(&flat, d)?;
        if let Some(&min) = vals.last() {
            if min < PSD_TOLERANCE {
                return Err(Error::InvalidParam(format!(
                    "correlation matrix is not positive semidefinite (eigenvalue {min:.3e})"
                )));
            }
        }
        let kept: Vec<usize> = (0..d).filter(|&i| vals[i] > RANK_CUTOFF).collect();
        let r = kept.len();
        if r == 0 {
            return Err(Error::InvalidParam("correlation matrix has rank zero".into()));
        }
        let mut c = vec![0.0; d * r];
        for (col, &e) in kept.iter().enumerate() {
            let s = vals[e].sqrt();
            for k in 0..d {
                c[k * r + col] = s * vecs[k * d + e];
            }
        }
        Ok(Self { d, r, c })
    }

    pub fn n_assets(&self) -> usize {
        self.d
    }

    /// Number of independent driving factors.
    pub fn n_factors(&self) -> usize {
        self.r
    }

    pub fn entry(&self, asset: usize, factor: usize) -> f64 {
        self.c[asset * self.r + factor]
    }

    /// out = C z, mapping factor draws to per-asset standard normals.
    pub fn mix(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.r);
        debug_assert_eq!(out.len(), self.d);
        for k in 0..self.d {
            let row = &self.c[k * self.r..(k + 1) * self.r];
            let mut acc = 0.0;
            for (ci, zi) in row.iter().zip(z) {
                acc += ci * zi;
            }
            out[k] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_loads_standard_basis() {
        let rho = equicorrelation(4, 0.0);
        let f = FactorLoadings::from_correlation(&rho).unwrap();
        assert_eq!(f.n_factors(), 4);
        for k in 0..4 {
            for i in 0..4 {
                assert_eq!(f.entry(k, i), if k == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn comonotone_reduces_to_one_factor() {
        let rho = equicorrelation(3, 1.0);
        let f = FactorLoadings::from_correlation(&rho).unwrap();
        assert_eq!(f.n_factors(), 1);
        for k in 0..3 {
            assert_abs_diff_eq!(f.entry(k, 0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn loadings_reproduce_correlation() {
        let rho = equicorrelation(3, 0.4);
        let f = FactorLoadings::from_correlation(&rho).unwrap();
        assert_eq!(f.n_factors(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..f.n_factors() {
                    s += f.entry(i, k) * f.entry(j, k);
                }
                assert_abs_diff_eq!(s, rho[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mix_applies_rows() {
        let rho = equicorrelation(2, 0.5);
        let f = FactorLoadings::from_correlation(&rho).unwrap();
        let z = vec![1.0, -2.0];
        let mut out = vec![0.0; 2];
        f.mix(&z, &mut out);
        let want0 = f.entry(0, 0) * z[0] + f.entry(0, 1) * z[1];
        let want1 = f.entry(1, 0) * z[0] + f.entry(1, 1) * z[1];
        assert_abs_diff_eq!(out[0], want0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], want1, epsilon = 1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let mut rho = equicorrelation(3, -0.9);
        rho[0][1] = -0.9;
        rho[1][0] = -0.9;
        // d=3 equicorrelation is PSD only for rho >= -0.5
        assert!(FactorLoadings::from_correlation(&rho).is_err());
    }
}
