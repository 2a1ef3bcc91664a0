//! Experiment configuration: a TOML file with a `[defaults]` table and a
//! list of `[[experiment]]` entries. Per-experiment keys win over defaults,
//! which win over built-in values.

use crate::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub defaults: RawDefaults,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<RawExperiment>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDefaults {
    pub paths: Option<usize>,
    pub benchmark_paths: Option<usize>,
    pub seed: Option<u64>,
    pub spot: Option<f64>,
    pub rate: Option<f64>,
    pub dt: Option<f64>,
    pub legendre_nodes: Option<usize>,
    pub riemann_dt: Option<f64>,
    pub greek_bump: Option<f64>,
    pub benchmark_bump: Option<f64>,
}

/// A number or a per-asset list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrVec {
    fn resolve(&self, d: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(x) => Ok(vec![*x; d]),
            ScalarOrVec::List(xs) => {
                if xs.len() == d {
                    Ok(xs.clone())
                } else {
                    Err(Error::Config(format!(
                        "{key}: {} entries for {} assets",
                        xs.len(),
                        d
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    pub dynamics: String,
    pub payoff: String,
    pub simplified: String,
    pub maturity: f64,
    pub strike: f64,
    pub barrier: Option<f64>,
    pub n_assets: Option<usize>,
    pub spot: Option<f64>,
    pub rate: Option<f64>,
    pub dt: Option<f64>,
    pub asset_corr: Option<f64>,
    pub v0: Option<ScalarOrVec>,
    pub kappa: Option<f64>,
    pub vol_of_vol: Option<f64>,
    pub rho_sv: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<ScalarOrVec>,
    pub sigma_abs: Option<ScalarOrVec>,
    pub paths: Option<usize>,
    pub benchmark_paths: Option<usize>,
    pub seed: Option<u64>,
    pub greeks: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    Heston,
    Sabr,
    Lognormal,
    Normal,
}

impl DynamicsKind {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsKind::Heston => "heston",
            DynamicsKind::Sabr => "sabr",
            DynamicsKind::Lognormal => "lognormal",
            DynamicsKind::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    Vanilla,
    Barrier,
    Asian,
    Basket,
    Max,
}

impl PayoffKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayoffKind::Vanilla => "vanilla",
            PayoffKind::Barrier => "barrier",
            PayoffKind::Asian => "asian",
            PayoffKind::Basket => "basket",
            PayoffKind::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplifiedKind {
    Black,
    Bachelier,
}

impl SimplifiedKind {
    pub fn name(&self) -> &'static str {
        match self {
            SimplifiedKind::Black => "black",
            SimplifiedKind::Bachelier => "bachelier",
        }
    }
}

/// One fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dynamics: DynamicsKind,
    pub payoff: PayoffKind,
    pub simplified: SimplifiedKind,
    pub maturity: f64,
    pub strike: f64,
    pub barrier: Option<f64>,
    pub n_assets: usize,
    pub spot: f64,
    pub rate: f64,
    pub dt: f64,
    pub asset_corr: f64,
    pub v0: Vec<f64>,
    pub kappa: f64,
    pub vol_of_vol: f64,
    pub rho_sv: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: Vec<f64>,
    pub sigma_abs: Vec<f64>,
    pub paths: usize,
    pub benchmark_paths: usize,
    pub seed: u64,
    pub greeks: bool,
}

/// Shared run controls resolved from `[defaults]`.
#[derive(Debug, Clone, Copy)]
pub struct RunDefaults {
    pub legendre_nodes: usize,
    pub riemann_dt: f64,
    pub greek_bump: f64,
    pub benchmark_bump: f64,
}

impl ExperimentConfig {
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}-{}y-k{}",
            self.dynamics.name(),
            self.payoff.name(),
            self.simplified.name(),
            self.maturity,
            self.strike
        )
    }
}

pub fn parse(text: &str) -> Result<(Vec<ExperimentConfig>, RunDefaults)> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    let d = &raw.defaults;
    let run = RunDefaults {
        legendre_nodes: d.legendre_nodes.unwrap_or(24),
        riemann_dt: d.riemann_dt.unwrap_or(1e-3),
        greek_bump: d.greek_bump.unwrap_or(1e-4),
        benchmark_bump: d.benchmark_bump.unwrap_or(1e-2),
    };
    let mut out = Vec::with_capacity(raw.experiments.len());
    for (i, e) in raw.experiments.iter().enumerate() {
        out.push(
            resolve(e, d).map_err(|err| Error::Config(format!("experiment {}: {err}", i + 1)))?,
        );
    }
    Ok((out, run))
}

fn resolve(e: &RawExperiment, d: &RawDefaults) -> Result<ExperimentConfig> {
    let dynamics = match e.dynamics.as_str() {
        "heston" => DynamicsKind::Heston,
        "sabr" => DynamicsKind::Sabr,
        "lognormal" => DynamicsKind::Lognormal,
        "normal" => DynamicsKind::Normal,
        other => return Err(Error::Config(format!("unknown dynamics '{other}'"))),
    };
    let payoff = match e.payoff.as_str() {
        "vanilla" => PayoffKind::Vanilla,
        "barrier" => PayoffKind::Barrier,
        "asian" => PayoffKind::Asian,
        "basket" => PayoffKind::Basket,
        "max" => PayoffKind::Max,
        other => return Err(Error::Config(format!("unknown payoff '{other}'"))),
    };
    let simplified = match e.simplified.as_str() {
        "black" => SimplifiedKind::Black,
        "bachelier" => SimplifiedKind::Bachelier,
        other => return Err(Error::Config(format!("unknown simplified model '{other}'"))),
    };
    let n_assets = e.n_assets.unwrap_or(1);
    if n_assets == 0 {
        return Err(Error::Config("n_assets must be at least 1".into()));
    }
    if e.maturity <= 0.0 {
        return Err(Error::Config("maturity must be positive".into()));
    }
    let dt = e
        .dt
        .or(d.dt)
        .ok_or_else(|| Error::Config("dt missing".into()))?;
    if dt <= 0.0 || dt > e.maturity {
        return Err(Error::Config("dt out of range".into()));
    }
    if payoff == PayoffKind::Barrier && e.barrier.is_none() {
        return Err(Error::Config("barrier payoff needs a barrier level".into()));
    }

    let v0 = match (&e.v0, dynamics) {
        (Some(v), _) => v.resolve(n_assets, "v0")?,
        (None, DynamicsKind::Heston) if n_assets == 1 => vec![0.01],
        (None, DynamicsKind::Sabr) if n_assets == 1 => vec![2.5],
        (None, DynamicsKind::Heston | DynamicsKind::Sabr) => {
            return Err(Error::Config("v0 required for multi-asset dynamics".into()))
        }
        (None, _) => vec![],
    };
    let sigma = match &e.sigma {
        Some(s) => s.resolve(n_assets, "sigma")?,
        None if dynamics == DynamicsKind::Lognormal => {
            return Err(Error::Config("lognormal dynamics needs sigma".into()))
        }
        None => vec![],
    };
    let sigma_abs = match &e.sigma_abs {
        Some(s) => s.resolve(n_assets, "sigma_abs")?,
        None if dynamics == DynamicsKind::Normal => {
            return Err(Error::Config("normal dynamics needs sigma_abs".into()))
        }
        None => vec![],
    };

    Ok(ExperimentConfig {
        dynamics,
        payoff,
        simplified,
        maturity: e.maturity,
        strike: e.strike,
        barrier: e.barrier,
        n_assets,
        spot: e.spot.or(d.spot).unwrap_or(100.0),
        rate: e.rate.or(d.rate).unwrap_or(0.0),
        dt,
        asset_corr: e.asset_corr.unwrap_or(0.0),
        v0,
        kappa: e.kappa.unwrap_or(5.0),
        vol_of_vol: e.vol_of_vol.unwrap_or(0.3),
        rho_sv: e.rho_sv.unwrap_or(match dynamics {
            DynamicsKind::Heston => -0.1,
            _ => 0.0,
        }),
        alpha: e.alpha.unwrap_or(0.4),
        beta: e.beta.unwrap_or(0.5),
        sigma,
        sigma_abs,
        paths: e.paths.or(d.paths).unwrap_or(5000),
        benchmark_paths: e.benchmark_paths.or(d.benchmark_paths).unwrap_or(1_000_000),
        seed: e.seed.or(d.seed).unwrap_or(20_240_901),
        greeks: e.greeks.unwrap_or(false),
    })
}
