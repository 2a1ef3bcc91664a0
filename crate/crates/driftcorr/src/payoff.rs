//! Terminal payoffs. All values are undiscounted; at expiry the forward
//! equals the spot, so payoffs read the terminal forwards directly.

use crate::error::{Error, Result};
use crate::simulate::{Observables, ObservableSpec};

#[derive(Clone, Debug)]
pub enum Payoff {
    VanillaCall { strike: f64 },
    /// Down-and-out call, barrier monitored on the spot at every grid time.
    DownOutCall { strike: f64, barrier: f64 },
    /// Arithmetic-average call on spot fixings.
    AsianCall { strike: f64, fixings: Vec<f64> },
    /// Weighted-sum call across assets.
    BasketCall { strike: f64, weights: Vec<f64> },
    /// Call on the maximum of the assets.
    MaxCall { strike: f64 },
}

impl Payoff {
    pub fn name(&self) -> &'static str {
        match self {
            Payoff::VanillaCall { .. } => "vanilla",
            Payoff::DownOutCall { .. } => "down-out",
            Payoff::AsianCall { .. } => "asian",
            Payoff::BasketCall { .. } => "basket",
            Payoff::MaxCall { .. } => "max",
        }
    }

    pub fn observable_spec(&self) -> ObservableSpec {
        ObservableSpec {
            track_min: matches!(self, Payoff::DownOutCall { .. }),
        }
    }

    pub fn fixing_times(&self) -> &[f64] {
        match self {
            Payoff::AsianCall { fixings, .. } => fixings,
            _ => &[],
        }
    }

    pub fn check_dimension(&self, d: usize) -> Result<()> {
        let ok = match self {
            Payoff::VanillaCall { .. } | Payoff::DownOutCall { .. } | Payoff::AsianCall { .. } => {
                d == 1
            }
            Payoff::BasketCall { weights, .. } => weights.len() == d,
            Payoff::MaxCall { .. } => d >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "payoff {} incompatible with {d} assets",
                self.name()
            )))
        }
    }

    pub fn terminal(&self, f_t: &[f64], obs: &Observables) -> f64 {
        match self {
            Payoff::VanillaCall { strike } => (f_t[0] - strike).max(0.0),
            Payoff::DownOutCall { strike, barrier } => {
                if obs.spot_min > *barrier {
                    (f_t[0] - strike).max(0.0)
                } else {
                    0.0
                }
            }
            Payoff::AsianCall { strike, fixings } => {
                debug_assert_eq!(obs.fixings_seen, fixings.len());
                (obs.fixing_sum / fixings.len() as f64 - strike).max(0.0)
            }
            Payoff::BasketCall { strike, weights } => {
                let b: f64 = weights.iter().zip(f_t).map(|(w, f)| w * f).sum();
                (b - strike).max(0.0)
            }
            Payoff::MaxCall { strike } => {
                let m = f_t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (m - strike).max(0.0)
            }
        }
    }
}

/// Quarterly fixing schedule k/4, k = 1..4T. The first fixing is at 0.25,
/// the last at expiry.
pub fn quarterly_fixings(maturity: f64) -> Result<Vec<f64>> {
    let n = (4.0 * maturity).round();
    if n < 1.0 || (n - 4.0 * maturity).abs() > 1e-9 {
        return Err(Error::InvalidParam(
            "averaging schedule needs a maturity in whole quarters".into(),
        ));
    }
    Ok((1..=n as usize).map(|k| k as f64 * 0.25).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanilla_and_basket() {
        let v = Payoff::VanillaCall { strike: 100.0 };
        assert_eq!(v.terminal(&[103.0], &Observables::fresh()), 3.0);
        assert_eq!(v.terminal(&[99.0], &Observables::fresh()), 0.0);
        let b = Payoff::BasketCall {
            strike: 10.0,
            weights: vec![0.5, 0.5],
        };
        assert_eq!(b.terminal(&[10.0, 14.0], &Observables::fresh()), 2.0);
    }

    #[test]
    fn barrier_knockout() {
        let p = Payoff::DownOutCall {
            strike: 100.0,
            barrier: 95.0,
        };
        let mut alive = Observables::fresh();
        alive.spot_min = 96.0;
        let mut dead = Observables::fresh();
        dead.spot_min = 95.0;
        assert_eq!(p.terminal(&[105.0], &alive), 5.0);
        assert_eq!(p.terminal(&[105.0], &dead), 0.0);
    }

    #[test]
    fn asian_average() {
        let p = Payoff::AsianCall {
            strike: 100.0,
            fixings: vec![0.25, 0.5, 0.75, 1.0],
        };
        let mut obs = Observables::fresh();
        obs.fixing_sum = 103.0 * 4.0;
        obs.fixings_seen = 4;
        assert_eq!(p.terminal(&[0.0], &obs), 3.0);
    }

    #[test]
    fn max_call() {
        let p = Payoff::MaxCall { strike: 100.0 };
        assert_eq!(p.terminal(&[90.0, 108.0, 99.0], &Observables::fresh()), 8.0);
    }

    #[test]
    fn quarterly_schedule() {
        assert_eq!(quarterly_fixings(1.0).unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(quarterly_fixings(5.0).unwrap().len(), 20);
        assert!(quarterly_fixings(0.9).is_err());
    }
}
