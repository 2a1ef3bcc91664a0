//! Market setup and asset dynamics under the forward measure.
//!
//! All models simulate the forward price F_t = X_t e^{r(T-t)}, which is a
//! martingale, so every kind below is driftless in the level component.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum Dynamics {
    /// Square-root stochastic variance with full-truncation Euler stepping.
    Heston {
        kappa: f64,
        theta: Vec<f64>,
        vol_of_vol: f64,
        rho_sv: f64,
        v0: Vec<f64>,
    },
    /// CEV level diffusion with lognormal stochastic volatility.
    Sabr {
        alpha: f64,
        beta: f64,
        rho_sv: f64,
        v0: Vec<f64>,
    },
    /// Constant lognormal volatility; the exact twin of the Black reference.
    LognormalConst { sigma: Vec<f64> },
    /// Constant absolute volatility; the exact twin of the Bachelier
    /// reference. Levels may go negative.
    NormalConst { sigma_abs: Vec<f64> },
}

impl Dynamics {
    pub fn n_assets(&self) -> usize {
        match self {
            Dynamics::Heston { v0, .. } => v0.len(),
            Dynamics::Sabr { v0, .. } => v0.len(),
            Dynamics::LognormalConst { sigma } => sigma.len(),
            Dynamics::NormalConst { sigma_abs } => sigma_abs.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Dynamics::Heston { .. } => "heston",
            Dynamics::Sabr { .. } => "sabr",
            Dynamics::LognormalConst { .. } => "lognormal",
            Dynamics::NormalConst { .. } => "normal",
        }
    }

    pub fn vol_init(&self) -> Vec<f64> {
        match self {
            Dynamics::Heston { v0, .. } => v0.clone(),
            Dynamics::Sabr { v0, .. } => v0.clone(),
            Dynamics::LognormalConst { sigma } => sigma.clone(),
            Dynamics::NormalConst { sigma_abs } => sigma_abs.clone(),
        }
    }

    pub fn rho_sv(&self) -> f64 {
        match self {
            Dynamics::Heston { rho_sv, .. } => *rho_sv,
            Dynamics::Sabr { rho_sv, .. } => *rho_sv,
            _ => 0.0,
        }
    }

    /// Diffusion coefficient of the forward level given the current
    /// (forward, vol-state) pair of one asset.
    pub fn diffusion(&self, f: f64, v: f64) -> f64 {
        match self {
            Dynamics::Heston { .. } => v.max(0.0).sqrt() * f,
            Dynamics::Sabr { beta, .. } => v * f.max(0.0).powf(*beta),
            Dynamics::LognormalConst { .. } => v * f,
            Dynamics::NormalConst { .. } => v,
        }
    }

    /// One Euler step of the vol state of one asset. `dz` is the correlated
    /// Brownian increment (already scaled by sqrt(dt)).
    pub fn step_vol_asset(&self, asset: usize, v: f64, dz: f64, dt: f64) -> f64 {
        match self {
            Dynamics::Heston {
                kappa,
                theta,
                vol_of_vol,
                ..
            } => {
                let vp = v.max(0.0);
                v + kappa * (theta[asset] - vp) * dt + vol_of_vol * vp.sqrt() * dz
            }
            Dynamics::Sabr { alpha, .. } => (v + alpha * v * dz).max(0.0),
            Dynamics::LognormalConst { .. } | Dynamics::NormalConst { .. } => v,
        }
    }

    /// Clamp applied to the level after an Euler step.
    pub fn clamp_level(&self, f: f64) -> f64 {
        match self {
            Dynamics::NormalConst { .. } => f,
            _ => f.max(0.0),
        }
    }

    /// Whether level paths scale with the initial level, so the pathwise
    /// derivative dX_t/dX_0 = X_t/X_0 holds. `Some(true)` when the relation
    /// is exact, `Some(false)` when it is an approximation (SABR with
    /// beta < 1), `None` when the dynamics are not level-proportional at all.
    pub fn pathwise_scaling(&self) -> Option<bool> {
        match self {
            Dynamics::Heston { .. } | Dynamics::LognormalConst { .. } => Some(true),
            Dynamics::Sabr { beta, .. } => Some((*beta - 1.0).abs() < 1e-12),
            Dynamics::NormalConst { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(msg.into()));
        match self {
            Dynamics::Heston {
                kappa,
                theta,
                vol_of_vol,
                rho_sv,
                v0,
            } => {
                if v0.is_empty() || theta.len() != v0.len() {
                    return bad("Heston v0/theta length mismatch");
                }
                if v0.iter().chain(theta).any(|x| *x < 0.0) {
                    return bad("Heston variance parameters must be nonnegative");
                }
                if *kappa < 0.0 || *vol_of_vol < 0.0 || rho_sv.abs() > 1.0 {
                    return bad("Heston kappa/vol-of-vol/correlation out of range");
                }
            }
            Dynamics::Sabr {
                alpha,
                beta,
                rho_sv,
                v0,
            } => {
                if v0.is_empty() || v0.iter().any(|x| *x < 0.0) {
                    return bad("SABR initial vols must be nonnegative");
                }
                if *alpha < 0.0 || !(0.0..=1.0).contains(beta) || rho_sv.abs() > 1.0 {
                    return bad("SABR alpha/beta/correlation out of range");
                }
            }
            Dynamics::LognormalConst { sigma } => {
                if sigma.is_empty() || sigma.iter().any(|x| *x < 0.0) {
                    return bad("lognormal sigma must be nonnegative");
                }
            }
            Dynamics::NormalConst { sigma_abs } => {
                if sigma_abs.is_empty() || sigma_abs.iter().any(|x| *x < 0.0) {
                    return bad("normal sigma must be nonnegative");
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Market {
    pub spot: Vec<f64>,
    pub rate: f64,
    /// Asset-asset correlation of the level drivers.
    pub corr: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub market: Market,
    pub dynamics: Dynamics,
}

impl Model {
    pub fn n_assets(&self) -> usize {
        self.dynamics.n_assets()
    }

    pub fn validate(&self) -> Result<()> {
        self.dynamics.validate()?;
        let d = self.n_assets();
        if self.market.spot.len() != d {
            return Err(Error::InvalidParam("spot vector length mismatch".into()));
        }
        if self.market.corr.len() != d {
            return Err(Error::InvalidParam("correlation size mismatch".into()));
        }
        Ok(())
    }

    /// Initial forwards for a claim expiring at `maturity`.
    pub fn forward0(&self, maturity: f64) -> Vec<f64> {
        let growth = (self.market.rate * maturity).exp();
        self.market.spot.iter().map(|s| s * growth).collect()
    }

    /// exp(-r (T - t)): converts a forward at time t into the spot.
    pub fn deflator(&self, t: f64, maturity: f64) -> f64 {
        (-self.market.rate * (maturity - t)).exp()
    }

    pub fn discount(&self, maturity: f64) -> f64 {
        (-self.market.rate * maturity).exp()
    }

    /// Spot bumped multiplicatively on one asset; used for bump-and-revalue
    /// benchmarks with common random numbers.
    pub fn with_bumped_spot(&self, asset: usize, factor: f64) -> Model {
        let mut m = self.clone();
        m.market.spot[asset] *= factor;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn heston1() -> Dynamics {
        Dynamics::Heston {
            kappa: 5.0,
            theta: vec![0.01],
            vol_of_vol: 0.3,
            rho_sv: -0.1,
            v0: vec![0.01],
        }
    }

    #[test]
    fn heston_full_truncation_uses_positive_part() {
        let dyn_ = heston1();
        // negative variance: diffusion vanishes, drift pulls up at kappa*theta
        assert_eq!(dyn_.diffusion(100.0, -0.5), 0.0);
        let v = dyn_.step_vol_asset(0, -0.02, 0.0, 0.1);
        assert_abs_diff_eq!(v, -0.02 + 5.0 * 0.01 * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn sabr_absorbs_at_zero() {
        let dyn_ = Dynamics::Sabr {
            alpha: 0.4,
            beta: 0.5,
            rho_sv: 0.0,
            v0: vec![2.5],
        };
        assert_eq!(dyn_.step_vol_asset(0, 1.0, -5.0, 0.01), 0.0);
        assert_eq!(dyn_.diffusion(-1.0, 2.5), 0.0);
        assert_abs_diff_eq!(dyn_.diffusion(100.0, 2.5), 25.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_vol_models_are_level_linear() {
        let g = Dynamics::LognormalConst { sigma: vec![0.2] };
        assert_abs_diff_eq!(g.diffusion(50.0, 0.2), 10.0, epsilon = 1e-15);
        let a = Dynamics::NormalConst { sigma_abs: vec![10.0] };
        assert_eq!(a.diffusion(-20.0, 10.0), 10.0);
        assert_eq!(a.clamp_level(-3.0), -3.0);
        assert_eq!(g.clamp_level(-3.0), 0.0);
    }

    #[test]
    fn forward_initialization() {
        let model = Model {
            market: Market {
                spot: vec![100.0],
                rate: 0.05,
                corr: vec![vec![1.0]],
            },
            dynamics: heston1(),
        };
        let f0 = model.forward0(1.0);
        assert_abs_diff_eq!(f0[0], 100.0 * (0.05f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(model.deflator(1.0, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            model.deflator(0.0, 1.0) * f0[0],
            100.0,
            epsilon = 1e-12
        );
    }
}
