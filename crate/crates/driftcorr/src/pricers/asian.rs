//! Arithmetic-average call under normal dynamics on the forward.
//!
//! The running fixing sum and fixing count enter through the path
//! observables, so the same value function serves every point along a path.

use super::bachelier::bachelier_call;
use super::StatePricer;
use crate::math::normal::{norm_cdf, norm_pdf};
use crate::simulate::Observables;

/// Average-price call valued by treating the forward as a driftless normal
/// process with constant absolute volatility. Fixings already observed are
/// frozen in `cond.fixing_sum`; later ones are projected off the current
/// forward with discount-deflated weights.
#[derive(Clone, Debug)]
pub struct AsianBachelier {
    pub strike: f64,
    pub sigma_abs: f64,
    pub rate: f64,
    pub maturity: f64,
    pub fixing_times: Vec<f64>,
}

impl AsianBachelier {
    pub fn new(
        strike: f64,
        sigma_abs: f64,
        rate: f64,
        maturity: f64,
        fixing_times: Vec<f64>,
    ) -> Self {
        Self {
            strike,
            sigma_abs,
            rate,
            maturity,
            fixing_times,
        }
    }

    /// n^{-1} e^{-r(T - T_j)}: average weight expressed on the forward.
    fn weight(&self, j: usize) -> f64 {
        (-self.rate * (self.maturity - self.fixing_times[j])).exp()
            / self.fixing_times.len() as f64
    }

    fn mean_sd(&self, t: f64, f: f64, cond: &Observables) -> (f64, f64) {
        let n = self.fixing_times.len();
        let first_rem = cond.fixings_seen.min(n);
        let mut mean = cond.fixing_sum / n as f64;
        let mut var = 0.0;
        for j in first_rem..n {
            let wj = self.weight(j);
            mean += f * wj;
            for l in first_rem..n {
                let wl = self.weight(l);
                let overlap = (self.fixing_times[j] - t)
                    .min(self.fixing_times[l] - t)
                    .max(0.0);
                var += wj * wl * overlap;
            }
        }
        (mean, self.sigma_abs * var.max(0.0).sqrt())
    }
}

impl StatePricer for AsianBachelier {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, t: f64, x: &[f64], cond: &Observables) -> f64 {
        let (mean, sd) = self.mean_sd(t, x[0], cond);
        bachelier_call(mean - self.strike, sd)
    }

    fn local_vol(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out[0] = self.sigma_abs;
    }

    fn name(&self) -> &'static str {
        "bachelier-asian"
    }

    fn delta0(&self, x0: &[f64], _asset: usize) -> f64 {
        let cond = Observables::fresh();
        let (mean, sd) = self.mean_sd(0.0, x0[0], &cond);
        let w: f64 = (0..self.fixing_times.len()).map(|j| self.weight(j)).sum();
        if sd < 1e-12 {
            return if mean > self.strike { w } else { 0.0 };
        }
        norm_cdf((mean - self.strike) / sd) * w
    }

    fn gamma0(&self, x0: &[f64], _asset: usize) -> f64 {
        let cond = Observables::fresh();
        let (mean, sd) = self.mean_sd(0.0, x0[0], &cond);
        let w: f64 = (0..self.fixing_times.len()).map(|j| self.weight(j)).sum();
        if sd < 1e-12 {
            return 0.0;
        }
        norm_pdf((mean - self.strike) / sd) / sd * w * w
    }
}
