//! Monte Carlo pricing engine with an analytic-reference variance reduction.
//!
//! The estimator values a claim under a full model (Heston, SABR, or flat-vol
//! dynamics) as the closed-form value under a simplified reference model plus
//! the expected running gap between the two generators:
//!
//! E[payoff] = psi(0, F_0) + E[ integral of xi_t dt ]
//!
//! where `psi` is the reference value function on forwards and `xi` is half
//! the difference of the two diffusion operators applied to `psi` along the
//! simulated path. Paths are simulated under the forward measure, so both
//! drifts vanish and `xi` reduces to a second-derivative contraction that is
//! evaluated by finite differences along factor directions. All estimates
//! are expected payoffs at maturity; a present value is the discount factor
//! times the estimate.

pub mod config;
pub mod corr;
pub mod correction;
pub mod error;
pub mod experiment;
pub mod greeks;
pub mod grid;
pub mod math;
pub mod model;
pub mod payoff;
pub mod pricers;
pub mod simulate;

pub use error::{Error, Result};
