//! Closed-form value functions for the simplified reference dynamics.
//!
//! Every pricer exposes the undiscounted conditional expectation of its
//! payoff as a function of the current forwards, plus the diffusion
//! coefficient of the reference dynamics. Path-dependent claims take the
//! frozen observables (fixings seen so far, barrier survival) as parameters;
//! between updates of those observables the value function solves the
//! reference backward equation, which is what the correction integrand
//! differentiates.

pub mod asian;
pub mod bachelier;
pub mod barrier;
pub mod basket;
pub mod black;
pub mod rainbow;

pub use asian::AsianBachelier;
pub use bachelier::{bachelier_call, BachelierVanilla};
pub use barrier::{down_out_call, BarrierDownOutBlack};
pub use basket::BasketBachelier;
pub use black::{black_call, BlackVanilla};
pub use rainbow::RainbowMaxBlack;

use crate::simulate::Observables;

pub trait StatePricer: Sync + Send {
    fn dim(&self) -> usize;

    /// Undiscounted conditional expectation of the terminal payoff under the
    /// reference dynamics, given current forwards `x` and the frozen path
    /// observables.
    fn value(&self, t: f64, x: &[f64], cond: &Observables) -> f64;

    /// Diffusion coefficient of the reference dynamics per asset at (t, x).
    fn local_vol(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// True when the observables make the claim worthless whatever `x` is;
    /// the correction integrand is pinned to zero there.
    fn knocked_out(&self, _cond: &Observables) -> bool {
        false
    }

    /// Lower edge of the region where the value function is smooth in each
    /// level coordinate at time `t`, if one exists. Finite-difference bumps
    /// shrink to stay above it.
    fn fd_floor(&self, _t: f64) -> Option<f64> {
        None
    }

    fn name(&self) -> &'static str;

    fn value0(&self, x0: &[f64]) -> f64 {
        self.value(0.0, x0, &Observables::fresh())
    }

    /// Sensitivity of the initial value to one forward coordinate. Closed
    /// form where available, central difference otherwise.
    fn delta0(&self, x0: &[f64], asset: usize) -> f64 {
        let h = 1e-4 * x0[asset].abs().max(1.0);
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[asset] += h;
        xm[asset] -= h;
        (self.value0(&xp) - self.value0(&xm)) / (2.0 * h)
    }

    /// Curvature of the initial value in one forward coordinate.
    fn gamma0(&self, x0: &[f64], asset: usize) -> f64 {
        let h = 1e-3 * x0[asset].abs().max(1.0);
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[asset] += h;
        xm[asset] -= h;
        (self.value0(&xp) - 2.0 * self.value0(x0) + self.value0(&xm)) / (h * h)
    }
}
