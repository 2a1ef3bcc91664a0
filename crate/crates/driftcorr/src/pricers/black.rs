//! Lognormal (Black) call on a forward, undiscounted.

use super::StatePricer;
use crate::math::normal::{norm_cdf, norm_pdf};
use crate::simulate::Observables;

/// Undiscounted call value E[(F_T - k)^+] with F lognormal around `f`.
pub fn black_call(f: f64, k: f64, sigma: f64, tau: f64) -> f64 {
    if k <= 0.0 {
        return f - k;
    }
    if f <= 0.0 {
        return 0.0;
    }
    let st = sigma * tau.max(0.0).sqrt();
    if st < 1e-12 {
        return (f - k).max(0.0);
    }
    let d1 = ((f / k).ln() + 0.5 * st * st) / st;
    f * norm_cdf(d1) - k * norm_cdf(d1 - st)
}

#[derive(Clone, Debug)]
pub struct BlackVanilla {
    pub strike: f64,
    pub sigma: f64,
    pub maturity: f64,
}

impl StatePricer for BlackVanilla {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, t: f64, x: &[f64], _cond: &Observables) -> f64 {
        black_call(x[0], self.strike, self.sigma, self.maturity - t)
    }

    fn local_vol(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.sigma * x[0].max(0.0);
    }

    fn fd_floor(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> &'static str {
        "black"
    }

    fn delta0(&self, x0: &[f64], _asset: usize) -> f64 {
        let (f, k) = (x0[0], self.strike);
        if k <= 0.0 {
            return 1.0;
        }
        if f <= 0.0 {
            return 0.0;
        }
        let st = self.sigma * self.maturity.max(0.0).sqrt();
        if st < 1e-12 {
            return if f > k { 1.0 } else { 0.0 };
        }
        norm_cdf(((f / k).ln() + 0.5 * st * st) / st)
    }

    fn gamma0(&self, x0: &[f64], _asset: usize) -> f64 {
        let (f, k) = (x0[0], self.strike);
        let st = self.sigma * self.maturity.max(0.0).sqrt();
        if k <= 0.0 || f <= 0.0 || st < 1e-12 {
            return 0.0;
        }
        let d1 = ((f / k).ln() + 0.5 * st * st) / st;
        norm_pdf(d1) / (f * st)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_values() {
        assert_abs_diff_eq!(black_call(100.0, 100.0, 0.2, 1.0), 7.9655674554057963, epsilon = 1e-12);
        let f = 100.0 * (0.05f64).exp();
        assert_abs_diff_eq!(black_call(f, 105.0, 0.1, 1.0), 4.2535448225971054, epsilon = 1e-12);
        assert_abs_diff_eq!(black_call(90.0, 100.0, 0.25, 0.5), 2.8411586739689584, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_limits() {
        assert_eq!(black_call(105.0, 100.0, 0.2, 0.0), 5.0);
        assert_eq!(black_call(95.0, 100.0, 0.2, 0.0), 0.0);
        assert_eq!(black_call(0.0, 100.0, 0.2, 1.0), 0.0);
        assert_abs_diff_eq!(black_call(100.0, -5.0, 0.2, 1.0), 105.0, epsilon = 1e-12);
        // sigma -> infinity: call tends to the forward
        assert_abs_diff_eq!(black_call(100.0, 80.0, 40.0, 1.0), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn pricer_interface() {
        let p = BlackVanilla {
            strike: 100.0,
            sigma: 0.2,
            maturity: 2.0,
        };
        let v = p.value(1.0, &[100.0], &Observables::fresh());
        assert_abs_diff_eq!(v, 7.9655674554057963, epsilon = 1e-12);
        let mut lv = [0.0];
        p.local_vol(0.0, &[50.0], &mut lv);
        assert_eq!(lv[0], 0.2 * 50.0);
        p.local_vol(0.0, &[-3.0], &mut lv);
        assert_eq!(lv[0], 0.0);
    }

    #[test]
    fn closed_form_greeks_match_finite_differences() {
        let p = BlackVanilla {
            strike: 100.0,
            sigma: 0.2,
            maturity: 1.0,
        };
        assert_abs_diff_eq!(p.delta0(&[100.0], 0), 0.53982783727702898, epsilon = 1e-15);
        assert_abs_diff_eq!(p.gamma0(&[100.0], 0), 0.019847627373850588, epsilon = 1e-15);
        for &f in &[85.0, 100.0, 130.0] {
            let h = 1e-4 * f;
            let fd = (p.value0(&[f + h]) - p.value0(&[f - h])) / (2.0 * h);
            let d = p.delta0(&[f], 0);
            assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-3), "delta at {f}");
        }
    }

    #[test]
    fn forward_pde_residual_is_small() {
        // psi_t + 0.5 sigma^2 x^2 psi_xx = 0
        let p = BlackVanilla {
            strike: 100.0,
            sigma: 0.25,
            maturity: 1.0,
        };
        let cond = Observables::fresh();
        for &(t, x) in &[(0.2, 90.0), (0.5, 100.0), (0.8, 120.0)] {
            let dt = 1e-5;
            let dx = 2e-4 * x;
            let vt = (p.value(t + dt, &[x], &cond) - p.value(t - dt, &[x], &cond)) / (2.0 * dt);
            let vxx = (p.value(t, &[x + dx], &cond) - 2.0 * p.value(t, &[x], &cond)
                + p.value(t, &[x - dx], &cond))
                / (dx * dx);
            let resid = vt + 0.5 * p.sigma * p.sigma * x * x * vxx;
            assert!(resid.abs() < 1e-5, "residual {resid} at ({t}, {x})");
        }
    }
}
