//! Weighted-basket call under jointly normal forwards.

use super::bachelier::bachelier_call;
use super::StatePricer;
use crate::math::normal::{norm_cdf, norm_pdf};
use crate::simulate::Observables;
use crate::{Error, Result};

/// Basket call on `d` forwards, each treated as a driftless normal process.
/// The basket itself is then normal, with variance per unit time given by
/// the weighted quadratic form of the absolute vols and correlations.
#[derive(Clone, Debug)]
pub struct BasketBachelier {
    pub strike: f64,
    pub weights: Vec<f64>,
    pub sigmas_abs: Vec<f64>,
    pub maturity: f64,
    qform: f64,
}

impl BasketBachelier {
    /// `corr` is the d x d asset correlation matrix in row-major order.
    pub fn new(
        strike: f64,
        weights: Vec<f64>,
        sigmas_abs: Vec<f64>,
        corr: &[f64],
        maturity: f64,
    ) -> Result<Self> {
        let d = weights.len();
        if sigmas_abs.len() != d {
            return Err(Error::InvalidParam(format!(
                "basket: {} weights but {} vols",
                d,
                sigmas_abs.len()
            )));
        }
        if corr.len() != d * d {
            return Err(Error::InvalidParam(format!(
                "basket: correlation matrix has {} entries, expected {}",
                corr.len(),
                d * d
            )));
        }
        let mut qform = 0.0;
        for i in 0..d {
            for j in 0..d {
                qform += weights[i] * weights[j] * sigmas_abs[i] * sigmas_abs[j] * corr[i * d + j];
            }
        }
        if qform < 0.0 {
            return Err(Error::InvalidParam(
                "basket: negative basket variance".into(),
            ));
        }
        Ok(Self {
            strike,
            weights,
            sigmas_abs,
            maturity,
            qform,
        })
    }
}

impl StatePricer for BasketBachelier {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, t: f64, x: &[f64], _cond: &Observables) -> f64 {
        let mean: f64 = self.weights.iter().zip(x).map(|(w, f)| w * f).sum();
        let tau = (self.maturity - t).max(0.0);
        bachelier_call(mean - self.strike, (self.qform * tau).sqrt())
    }

    fn local_vol(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.sigmas_abs);
    }

    fn name(&self) -> &'static str {
        "bachelier-basket"
    }

    fn delta0(&self, x0: &[f64], asset: usize) -> f64 {
        let mean: f64 = self.weights.iter().zip(x0).map(|(w, f)| w * f).sum();
        let sd = (self.qform * self.maturity.max(0.0)).sqrt();
        if sd < 1e-12 {
            return if mean > self.strike { self.weights[asset] } else { 0.0 };
        }
        norm_cdf((mean - self.strike) / sd) * self.weights[asset]
    }

    fn gamma0(&self, x0: &[f64], asset: usize) -> f64 {
        let mean: f64 = self.weights.iter().zip(x0).map(|(w, f)| w * f).sum();
        let sd = (self.qform * self.maturity.max(0.0)).sqrt();
        if sd < 1e-12 {
            return 0.0;
        }
        let w = self.weights[asset];
        norm_pdf((mean - self.strike) / sd) / sd * w * w
    }
}
