//! Best-of (max) call on several lognormal forwards.
//!
//! Requires the asset correlation to have one-factor product form
//! rho_kj = a_k * a_j. Conditional on the common factor the forwards are
//! independent lognormals and the call on their maximum has a
//! one-dimensional integral representation per asset, evaluated with fixed
//! Gauss rules so the value stays smooth in the state.

use super::StatePricer;
use crate::math::normal::{norm_cdf, norm_pdf};
use crate::math::quadrature::{GaussHermite, GaussLegendre};
use crate::simulate::Observables;
use crate::{Error, Result};

const TAIL: f64 = 8.5;
const PRODUCT_FIT_TOL: f64 = 1e-10;

/// Extract loadings a with rho_kj = a_k a_j, or report that the matrix has
/// no such factorization.
fn one_factor_loadings(corr: &[f64], d: usize) -> Result<Vec<f64>> {
    let at = |i: usize, j: usize| corr[i * d + j];
    for i in 0..d {
        if (at(i, i) - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParam("rainbow: diagonal must be 1".into()));
        }
        for j in 0..d {
            if (at(i, j) - at(j, i)).abs() > 1e-10 {
                return Err(Error::InvalidParam("rainbow: asymmetric correlation".into()));
            }
        }
    }
    if d == 1 {
        return Ok(vec![1.0]);
    }
    if d == 2 {
        let rho = at(0, 1);
        let r = rho.abs().min(1.0).sqrt();
        return Ok(vec![r, rho.signum() * r]);
    }

    let candidate = {
        let rho0 = at(0, 1);
        let equi = (0..d).all(|i| (0..d).all(|j| i == j || (at(i, j) - rho0).abs() < 1e-10));
        if equi && rho0 >= 1.0 - 1e-10 {
            Some(vec![1.0; d])
        } else if equi && (0.0..1.0).contains(&rho0) {
            Some(vec![rho0.sqrt(); d])
        } else {
            general_product_fit(corr, d)
        }
    };
    let a = candidate.ok_or_else(|| {
        Error::InvalidParam("rainbow: correlation is not of one-factor form".into())
    })?;
    for i in 0..d {
        for j in 0..d {
            if i != j && (at(i, j) - a[i] * a[j]).abs() > PRODUCT_FIT_TOL {
                return Err(Error::InvalidParam(
                    "rainbow: correlation is not of one-factor form".into(),
                ));
            }
        }
    }
    Ok(a)
}

fn general_product_fit(corr: &[f64], d: usize) -> Option<Vec<f64>> {
    let at = |i: usize, j: usize| corr[i * d + j];
    // reference asset: strongest coupling to the rest
    let m = (0..d).max_by(|&p, &q| {
        let s = |i: usize| (0..d).filter(|&j| j != i).map(|j| at(i, j).abs()).sum::<f64>();
        s(p).partial_cmp(&s(q)).unwrap()
    })?;
    let mut best: Option<(usize, usize)> = None;
    for j in 0..d {
        for k in 0..d {
            if j != k && j != m && k != m {
                let better = match best {
                    Some((bj, bk)) => at(j, k).abs() > at(bj, bk).abs(),
                    None => true,
                };
                if better {
                    best = Some((j, k));
                }
            }
        }
    }
    let (j, k) = best?;
    if at(j, k).abs() < 1e-12 {
        // either fully independent or not factorable; zeros cover the former
        // and the verification pass rejects the latter
        return Some(vec![0.0; d]);
    }
    let am2 = at(m, j) * at(m, k) / at(j, k);
    if !(0.0..=1.0 + 1e-10).contains(&am2) {
        return None;
    }
    let am = am2.min(1.0).sqrt();
    if am < 1e-8 {
        return None;
    }
    let mut a = vec![0.0; d];
    a[m] = am;
    for i in 0..d {
        if i != m {
            a[i] = (at(m, i) / am).clamp(-1.0, 1.0);
        }
    }
    Some(a)
}

/// Upper envelope of lines y = c + s*lambda, returned as segments
/// (lo, hi, c, s) covering the whole real axis.
fn upper_envelope(mut lines: Vec<(f64, f64)>) -> Vec<(f64, f64, f64, f64)> {
    // (c, s); sort by slope, keep the highest intercept among equal slopes
    lines.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.partial_cmp(&y.0).unwrap()));
    let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
    for (c, s) in lines {
        if let Some(last) = dedup.last() {
            if (s - last.1).abs() < 1e-14 {
                if c > last.0 {
                    *dedup.last_mut().unwrap() = (c, s);
                }
                continue;
            }
        }
        dedup.push((c, s));
    }

    let cross = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0) / (q.1 - p.1);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(dedup.len());
    for line in dedup {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if cross(a, line) <= cross(a, b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(line);
    }

    let mut segs = Vec::with_capacity(hull.len());
    for (i, &(c, s)) in hull.iter().enumerate() {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            cross(hull[i - 1], (c, s))
        };
        let hi = if i + 1 == hull.len() {
            f64::INFINITY
        } else {
            cross((c, s), hull[i + 1])
        };
        if hi > lo {
            segs.push((lo, hi, c, s));
        }
    }
    segs
}

/// E[(e^{c + s Z} - strike)^+ on a <= Z <= b] for standard normal Z.
fn segment_expectation(lo: f64, hi: f64, c: f64, s: f64, strike: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    if strike > 0.0 {
        let t = strike.ln();
        if s > 0.0 {
            a = a.max((t - c) / s);
        } else if s < 0.0 {
            b = b.min((t - c) / s);
        } else if c <= t {
            return 0.0;
        }
    }
    if a >= b {
        return 0.0;
    }
    let a = a.max(-40.0);
    let b = b.min(40.0);
    if a >= b {
        return 0.0;
    }
    let prob = norm_cdf(b) - norm_cdf(a);
    let tilted = norm_cdf(b - s) - norm_cdf(a - s);
    let mut out = -strike * prob;
    if tilted > 0.0 {
        out += (c + 0.5 * s * s).exp() * tilted;
    }
    out
}

#[derive(Clone, Debug)]
pub struct RainbowMaxBlack {
    pub strike: f64,
    pub sigmas: Vec<f64>,
    pub maturity: f64,
    loadings: Vec<f64>,
    degenerate: bool,
    gh: GaussHermite,
    gl: GaussLegendre,
}

impl RainbowMaxBlack {
    pub fn new(strike: f64, sigmas: Vec<f64>, corr: &[f64], maturity: f64) -> Result<Self> {
        let d = sigmas.len();
        if d == 0 {
            return Err(Error::InvalidParam("rainbow: no assets".into()));
        }
        if strike <= 0.0 {
            return Err(Error::InvalidParam("rainbow: strike must be positive".into()));
        }
        if sigmas.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidParam("rainbow: vols must be positive".into()));
        }
        if corr.len() != d * d {
            return Err(Error::InvalidParam(format!(
                "rainbow: correlation matrix has {} entries, expected {}",
                corr.len(),
                d * d
            )));
        }
        let loadings = one_factor_loadings(corr, d)?;
        let degenerate = loadings.iter().all(|a| (a.abs() - 1.0).abs() < 1e-10);
        if !degenerate && loadings.iter().any(|a| a.abs() > 1.0 - 1e-8) {
            return Err(Error::InvalidParam(
                "rainbow: mixed degenerate/diffuse loadings not supported".into(),
            ));
        }
        Ok(Self {
            strike,
            sigmas,
            maturity,
            loadings,
            degenerate,
            gh: GaussHermite::new(24)?,
            gl: GaussLegendre::new(48)?,
        })
    }

    fn value_inner(&self, tau: f64, x: &[f64]) -> f64 {
        // assets at or below zero never attain a positive maximum
        let active: Vec<usize> = (0..x.len()).filter(|&k| x[k] > 0.0).collect();
        if active.is_empty() || tau * self.sigmas.iter().fold(0.0f64, |m, s| m.max(*s)) < 1e-12 {
            let m = x.iter().fold(0.0f64, |m, &v| m.max(v));
            return (m - self.strike).max(0.0);
        }
        let rt = tau.sqrt();

        if self.degenerate {
            let lines: Vec<(f64, f64)> = active
                .iter()
                .map(|&k| {
                    let s = self.sigmas[k] * rt;
                    (x[k].ln() - 0.5 * s * s, s * self.loadings[k])
                })
                .collect();
            return upper_envelope(lines)
                .into_iter()
                .map(|(lo, hi, c, s)| segment_expectation(lo, hi, c, s, self.strike))
                .sum();
        }

        let n = active.len();
        let mut m = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let lnk = self.strike.ln();
        let mut total = 0.0;
        for (u, w) in self.gh.standard_normal() {
            for (i, &k) in active.iter().enumerate() {
                let s = self.sigmas[k] * rt;
                let a = self.loadings[k];
                m[i] = x[k].ln() - 0.5 * s * s + s * a * u;
                v[i] = s * (1.0 - a * a).sqrt();
                beta[i] = (lnk - m[i]) / v[i];
            }
            let mut none_above = 1.0;
            for b in &beta {
                none_above *= norm_cdf(*b);
            }
            let mut cond = -self.strike * (1.0 - none_above);
            for i in 0..n {
                let lo = (beta[i] - v[i]).max(-TAIL);
                if lo >= TAIL {
                    continue;
                }
                let xhat = (m[i] + 0.5 * v[i] * v[i]).exp();
                let mid = 0.5 * (lo + TAIL);
                let mut integral = 0.0;
                for (pa, pb) in [(lo, mid), (mid, TAIL)] {
                    for (z, wz) in self.gl.mapped(pa, pb) {
                        let top = m[i] + v[i] * v[i] + v[i] * z;
                        let mut others = 1.0;
                        for j in 0..n {
                            if j != i {
                                others *= norm_cdf((top - m[j]) / v[j]);
                            }
                        }
                        integral += wz * norm_pdf(z) * others;
                    }
                }
                cond += xhat * integral;
            }
            total += w * cond;
        }
        total
    }
}

impl StatePricer for RainbowMaxBlack {
    fn dim(&self) -> usize {
        self.sigmas.len()
    }

    fn value(&self, t: f64, x: &[f64], _cond: &Observables) -> f64 {
        self.value_inner((self.maturity - t).max(0.0), x)
    }

    fn local_vol(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, (s, f)) in out.iter_mut().zip(self.sigmas.iter().zip(x)) {
            *o = s * f.max(0.0);
        }
    }

    fn fd_floor(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> &'static str {
        "black-max"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricers::black::BlackVanilla;
    use approx::assert_abs_diff_eq;

    fn equicorr(d: usize, rho: f64) -> Vec<f64> {
        let mut m = vec![rho; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        m
    }

    #[test]
    fn reference_value_three_assets() {
        let p = RainbowMaxBlack::new(
            100.0,
            vec![0.2, 0.25, 0.3],
            &equicorr(3, 0.4),
            0.7,
        )
        .unwrap();
        let v = p.value(0.0, &[100.0, 95.0, 108.0], &Observables::fresh());
        assert_abs_diff_eq!(v, 19.10907269205742, epsilon = 5e-9);
    }

    #[test]
    fn reference_value_at_the_money() {
        let p = RainbowMaxBlack::new(
            100.0,
            vec![0.2, 0.25, 0.3],
            &equicorr(3, 0.4),
            1.0,
        )
        .unwrap();
        let v = p.value(0.0, &[100.0, 100.0, 100.0], &Observables::fresh());
        assert_abs_diff_eq!(v, 20.23893046372959, epsilon = 5e-9);
    }

    #[test]
    fn single_asset_matches_vanilla() {
        let p = RainbowMaxBlack::new(105.0, vec![0.2], &[1.0], 1.0).unwrap();
        let vanilla = BlackVanilla {
            strike: 105.0,
            sigma: 0.2,
            maturity: 1.0,
        };
        let cond = Observables::fresh();
        for &(t, f) in &[(0.0, 100.0), (0.4, 112.0), (0.9, 95.0)] {
            assert_abs_diff_eq!(
                p.value(t, &[f], &cond),
                vanilla.value(t, &[f], &cond),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn comonotone_matches_dense_riemann_sum() {
        let p = RainbowMaxBlack::new(
            100.0,
            vec![0.15, 0.35],
            &equicorr(2, 1.0),
            1.0,
        )
        .unwrap();
        let x = [104.0, 97.0];
        let got = p.value(0.0, &x, &Observables::fresh());

        // brute force over the common factor
        let n = 400_000;
        let (a, b) = (-9.0f64, 9.0f64);
        let h = (b - a) / n as f64;
        let mut brute = 0.0;
        for i in 0..n {
            let lam = a + (i as f64 + 0.5) * h;
            let y0 = x[0].ln() - 0.5 * 0.15f64.powi(2) + 0.15 * lam;
            let y1 = x[1].ln() - 0.5 * 0.35f64.powi(2) + 0.35 * lam;
            let m = y0.max(y1).exp();
            brute += h * norm_pdf(lam) * (m - 100.0).max(0.0);
        }
        assert_abs_diff_eq!(got, brute, epsilon = 1e-6);
    }

    #[test]
    fn dominated_comonotone_asset_is_inert() {
        // same vol, lower level: the second asset never attains the max
        let p = RainbowMaxBlack::new(100.0, vec![0.2, 0.2], &equicorr(2, 1.0), 1.0).unwrap();
        let vanilla = BlackVanilla {
            strike: 100.0,
            sigma: 0.2,
            maturity: 1.0,
        };
        let cond = Observables::fresh();
        assert_abs_diff_eq!(
            p.value(0.0, &[105.0, 95.0], &cond),
            vanilla.value(0.0, &[105.0], &cond),
            epsilon = 1e-12
        );
    }

    #[test]
    fn independent_assets_match_dense_quadrature() {
        // zero correlation is one-factor with zero loadings
        let p = RainbowMaxBlack::new(
            100.0,
            vec![0.2, 0.3],
            &equicorr(2, 0.0),
            1.0,
        )
        .unwrap();
        let x = [100.0, 96.0];
        let got = p.value(0.0, &x, &Observables::fresh());

        // P(max <= y) = prod_k Phi((ln y - m_k)/s_k); integrate the tail
        let m0 = x[0].ln() - 0.02;
        let m1 = x[1].ln() - 0.045;
        let n = 800_000;
        let (a, b) = (100.0f64.ln(), 100.0f64.ln() + 4.0);
        let h = (b - a) / n as f64;
        let mut brute = 0.0;
        // E[(M-K)^+] = int_K^inf P(M > y) dy, substituting y = e^g
        for i in 0..n {
            let g = a + (i as f64 + 0.5) * h;
            let cdf = norm_cdf((g - m0) / 0.2) * norm_cdf((g - m1) / 0.3);
            brute += h * g.exp() * (1.0 - cdf);
        }
        assert_abs_diff_eq!(got, brute, epsilon = 1e-4);
    }

    #[test]
    fn equicorr_value_between_independent_and_comonotone() {
        let x = [100.0, 95.0, 108.0];
        let cond = Observables::fresh();
        let sig = vec![0.2, 0.25, 0.3];
        let v_ind = RainbowMaxBlack::new(100.0, sig.clone(), &equicorr(3, 0.0), 0.7)
            .unwrap()
            .value(0.0, &x, &cond);
        let v_mid = RainbowMaxBlack::new(100.0, sig.clone(), &equicorr(3, 0.4), 0.7)
            .unwrap()
            .value(0.0, &x, &cond);
        let v_com = RainbowMaxBlack::new(100.0, sig, &equicorr(3, 1.0), 0.7)
            .unwrap()
            .value(0.0, &x, &cond);
        assert!(v_ind > v_mid && v_mid > v_com, "{v_ind} {v_mid} {v_com}");
    }

    #[test]
    fn rejects_non_factor_correlation() {
        // valid correlation matrix, but rho_01 * rho_02 / rho_12 mismatch
        let corr = vec![1.0, 0.8, 0.1, 0.8, 1.0, 0.6, 0.1, 0.6, 1.0];
        assert!(RainbowMaxBlack::new(100.0, vec![0.2, 0.2, 0.2], &corr, 1.0).is_err());
    }

    #[test]
    fn general_product_form_is_detected() {
        let a = [0.9, 0.5, 0.3];
        let mut corr = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                corr[i * 3 + j] = if i == j { 1.0 } else { a[i] * a[j] };
            }
        }
        let p = RainbowMaxBlack::new(100.0, vec![0.2, 0.25, 0.3], &corr, 1.0).unwrap();
        let v = p.value(0.0, &[100.0, 95.0, 108.0], &Observables::fresh());
        assert!(v.is_finite() && v > 8.0);
    }

    #[test]
    fn zero_forward_asset_is_ignored() {
        let p =
            RainbowMaxBlack::new(100.0, vec![0.2, 0.25, 0.3], &equicorr(3, 0.4), 1.0).unwrap();
        let cond = Observables::fresh();
        let with_dead = p.value(0.3, &[101.0, 0.0, 99.0], &cond);
        assert!(with_dead.is_finite() && with_dead > 0.0);
        let all_dead = p.value(0.3, &[0.0, 0.0, 0.0], &cond);
        assert_eq!(all_dead, 0.0);
    }

    #[test]
    fn martingale_in_time_under_reference_dynamics() {
        // E[psi(t, F_t)] should not depend on t; push the forwards to
        // t = 0.5 with the exact lognormal transition and integrate
        let p = RainbowMaxBlack::new(100.0, vec![0.2, 0.3], &equicorr(2, 0.0), 1.0).unwrap();
        let cond = Observables::fresh();
        let x0 = [100.0, 96.0];
        let at0 = p.value(0.0, &x0, &cond);

        let gh = GaussHermite::new(40).unwrap();
        let nodes: Vec<(f64, f64)> = gh.standard_normal().collect();
        let mut acc = 0.0;
        for &(z0, w0) in &nodes {
            for &(z1, w1) in &nodes {
                let f = [
                    x0[0] * (-0.5 * 0.04 * 0.5 + 0.2 * 0.5f64.sqrt() * z0).exp(),
                    x0[1] * (-0.5 * 0.09 * 0.5 + 0.3 * 0.5f64.sqrt() * z1).exp(),
                ];
                acc += w0 * w1 * p.value(0.5, &f, &cond);
            }
        }
        assert_abs_diff_eq!(acc, at0, epsilon = 1e-6);
    }
}
