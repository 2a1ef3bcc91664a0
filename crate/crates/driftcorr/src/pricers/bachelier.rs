//! Normal (Bachelier) call on a forward, undiscounted.

use super::StatePricer;
use crate::math::normal::{norm_cdf, norm_pdf};
use crate::simulate::Observables;

/// E[(Y - k)^+] for Y normal with mean `f - k = m` and standard deviation `sd`.
pub fn bachelier_call(m: f64, sd: f64) -> f64 {
    if sd < 1e-12 {
        return m.max(0.0);
    }
    let d = m / sd;
    m * norm_cdf(d) + sd * norm_pdf(d)
}

#[derive(Clone, Debug)]
pub struct BachelierVanilla {
    pub strike: f64,
    pub sigma_abs: f64,
    pub maturity: f64,
}

impl StatePricer for BachelierVanilla {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, t: f64, x: &[f64], _cond: &Observables) -> f64 {
        let sd = self.sigma_abs * (self.maturity - t).max(0.0).sqrt();
        bachelier_call(x[0] - self.strike, sd)
    }

    fn local_vol(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out[0] = self.sigma_abs;
    }

    fn name(&self) -> &'static str {
        "bachelier"
    }

    fn delta0(&self, x0: &[f64], _asset: usize) -> f64 {
        let sd = self.sigma_abs * self.maturity.max(0.0).sqrt();
        if sd < 1e-12 {
            return if x0[0] > self.strike { 1.0 } else { 0.0 };
        }
        norm_cdf((x0[0] - self.strike) / sd)
    }

    fn gamma0(&self, x0: &[f64], _asset: usize) -> f64 {
        let sd = self.sigma_abs * self.maturity.max(0.0).sqrt();
        if sd < 1e-12 {
            return 0.0;
        }
        norm_pdf((x0[0] - self.strike) / sd) / sd
    }
}
