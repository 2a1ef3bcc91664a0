//! Assembly of configured experiments and the table runner with CSV output.

use crate::config::{DynamicsKind, ExperimentConfig, PayoffKind, RunDefaults, SimplifiedKind};
use crate::corr::{equicorrelation, FactorLoadings};
use crate::correction::{
    build_scheme, Estimator, FdParams, GreekSettings, MethodRun, NodeScheme, QuadRule,
};
use crate::greeks::{run_crude, run_crude_greeks, CrudeGreeks, CrudeRun};
use crate::grid::TimeGrid;
use crate::model::{Dynamics, Market, Model};
use crate::payoff::{quarterly_fixings, Payoff};
use crate::pricers::{
    AsianBachelier, BachelierVanilla, BarrierDownOutBlack, BasketBachelier, BlackVanilla,
    RainbowMaxBlack, StatePricer,
};
use crate::{Error, Result};
use std::io::Write;
use std::time::Instant;

pub fn build_dynamics(cfg: &ExperimentConfig) -> Dynamics {
    match cfg.dynamics {
        DynamicsKind::Heston => Dynamics::Heston {
            kappa: cfg.kappa,
            theta: cfg.v0.clone(),
            vol_of_vol: cfg.vol_of_vol,
            rho_sv: cfg.rho_sv,
            v0: cfg.v0.clone(),
        },
        DynamicsKind::Sabr => Dynamics::Sabr {
            alpha: cfg.alpha,
            beta: cfg.beta,
            rho_sv: cfg.rho_sv,
            v0: cfg.v0.clone(),
        },
        DynamicsKind::Lognormal => Dynamics::LognormalConst {
            sigma: cfg.sigma.clone(),
        },
        DynamicsKind::Normal => Dynamics::NormalConst {
            sigma_abs: cfg.sigma_abs.clone(),
        },
    }
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<Model> {
    let model = Model {
        market: Market {
            spot: vec![cfg.spot; cfg.n_assets],
            rate: cfg.rate,
            corr: equicorrelation(cfg.n_assets, cfg.asset_corr),
        },
        dynamics: build_dynamics(cfg),
    };
    model.validate()?;
    Ok(model)
}

pub fn build_payoff(cfg: &ExperimentConfig) -> Result<Payoff> {
    Ok(match cfg.payoff {
        PayoffKind::Vanilla => Payoff::VanillaCall { strike: cfg.strike },
        PayoffKind::Barrier => Payoff::DownOutCall {
            strike: cfg.strike,
            barrier: cfg.barrier.expect("validated in config"),
        },
        PayoffKind::Asian => Payoff::AsianCall {
            strike: cfg.strike,
            fixings: quarterly_fixings(cfg.maturity)?,
        },
        PayoffKind::Basket => Payoff::BasketCall {
            strike: cfg.strike,
            weights: vec![1.0 / cfg.n_assets as f64; cfg.n_assets],
        },
        PayoffKind::Max => Payoff::MaxCall { strike: cfg.strike },
    })
}

/// Volatility of the simplified reference model per asset, matched to the
/// model's diffusion coefficient at the initial spot.
pub fn reference_vols(cfg: &ExperimentConfig) -> Vec<f64> {
    let s = cfg.spot;
    match (cfg.dynamics, cfg.simplified) {
        (DynamicsKind::Heston, SimplifiedKind::Black) => {
            cfg.v0.iter().map(|v| v.sqrt()).collect()
        }
        (DynamicsKind::Heston, SimplifiedKind::Bachelier) => {
            cfg.v0.iter().map(|v| s * v.sqrt()).collect()
        }
        (DynamicsKind::Sabr, SimplifiedKind::Black) => {
            cfg.v0.iter().map(|v| v * s.powf(cfg.beta - 1.0)).collect()
        }
        (DynamicsKind::Sabr, SimplifiedKind::Bachelier) => {
            cfg.v0.iter().map(|v| v * s.powf(cfg.beta)).collect()
        }
        (DynamicsKind::Lognormal, SimplifiedKind::Black) => cfg.sigma.clone(),
        (DynamicsKind::Lognormal, SimplifiedKind::Bachelier) => {
            cfg.sigma.iter().map(|x| x * s).collect()
        }
        (DynamicsKind::Normal, SimplifiedKind::Bachelier) => cfg.sigma_abs.clone(),
        (DynamicsKind::Normal, SimplifiedKind::Black) => {
            cfg.sigma_abs.iter().map(|x| x / s).collect()
        }
    }
}

pub fn build_pricer(cfg: &ExperimentConfig, monitor_dt: f64) -> Result<Box<dyn StatePricer>> {
    let vols = reference_vols(cfg);
    let flat_corr: Vec<f64> = equicorrelation(cfg.n_assets, cfg.asset_corr)
        .into_iter()
        .flatten()
        .collect();
    Ok(match (cfg.payoff, cfg.simplified) {
        (PayoffKind::Vanilla, SimplifiedKind::Black) => Box::new(BlackVanilla {
            strike: cfg.strike,
            sigma: vols[0],
            maturity: cfg.maturity,
        }),
        (PayoffKind::Vanilla, SimplifiedKind::Bachelier) => Box::new(BachelierVanilla {
            strike: cfg.strike,
            sigma_abs: vols[0],
            maturity: cfg.maturity,
        }),
        (PayoffKind::Barrier, SimplifiedKind::Black) => Box::new(BarrierDownOutBlack::new(
            cfg.strike,
            cfg.barrier.expect("validated in config"),
            cfg.rate,
            vols[0],
            cfg.maturity,
            monitor_dt,
        )),
        (PayoffKind::Asian, SimplifiedKind::Bachelier) => Box::new(AsianBachelier::new(
            cfg.strike,
            vols[0],
            cfg.rate,
            cfg.maturity,
            quarterly_fixings(cfg.maturity)?,
        )),
        (PayoffKind::Basket, SimplifiedKind::Bachelier) => Box::new(BasketBachelier::new(
            cfg.strike,
            vec![1.0 / cfg.n_assets as f64; cfg.n_assets],
            vols,
            &flat_corr,
            cfg.maturity,
        )?),
        (PayoffKind::Max, SimplifiedKind::Black) => Box::new(RainbowMaxBlack::new(
            cfg.strike,
            vols,
            &flat_corr,
            cfg.maturity,
        )?),
        (p, s) => {
            return Err(Error::Config(format!(
                "no reference pricer for payoff '{}' with simplified model '{}'",
                p.name(),
                s.name()
            )))
        }
    })
}

/// Asset whose spot is bumped for sensitivities: the one with the largest
/// initial volatility state.
pub fn greek_asset(cfg: &ExperimentConfig) -> usize {
    let vols = build_dynamics(cfg).vol_init();
    let mut best = 0;
    for (k, v) in vols.iter().enumerate() {
        if *v > vols[best] {
            best = k;
        }
    }
    best
}

pub struct Assembled {
    pub model: Model,
    pub payoff: Payoff,
    pub pricer: Box<dyn StatePricer>,
    pub loadings: FactorLoadings,
    pub grid: TimeGrid,
    pub scheme: NodeScheme,
    pub greek_asset: usize,
}

pub fn assemble(cfg: &ExperimentConfig, rule: QuadRule) -> Result<Assembled> {
    let model = build_model(cfg)?;
    let payoff = build_payoff(cfg)?;
    payoff.check_dimension(cfg.n_assets)?;
    let scheme = build_scheme(rule, cfg.maturity, payoff.fixing_times())?;
    let grid = TimeGrid::build(cfg.maturity, cfg.dt, &scheme.times, payoff.fixing_times())?;
    let pricer = build_pricer(cfg, grid.base_dt)?;
    if pricer.dim() != cfg.n_assets {
        return Err(Error::Config("pricer dimension mismatch".into()));
    }
    let loadings = FactorLoadings::from_correlation(&model.market.corr)?;
    Ok(Assembled {
        model,
        payoff,
        pricer,
        loadings,
        grid,
        scheme,
        greek_asset: greek_asset(cfg),
    })
}

/// Seed offset separating benchmark randomness from the method run.
pub const BENCHMARK_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub quad: QuadRule,
    pub greek_bump: f64,
    pub benchmark_bump: f64,
    pub timings: bool,
    pub paths_override: Option<usize>,
    pub benchmark_paths_override: Option<usize>,
    pub seed_override: Option<u64>,
    pub force_greeks: bool,
}

impl RunOptions {
    pub fn from_defaults(run: &RunDefaults) -> Self {
        Self {
            quad: QuadRule::Legendre {
                nodes: run.legendre_nodes,
            },
            greek_bump: run.greek_bump,
            benchmark_bump: run.benchmark_bump,
            timings: true,
            paths_override: None,
            benchmark_paths_override: None,
            seed_override: None,
            force_greeks: false,
        }
    }
}

/// Difference of two independent estimates in units of its standard error.
/// Degenerate only when both claim zero error yet disagree.
pub fn compute_z_score(a: f64, se_a: f64, b: f64, se_b: f64) -> Result<f64> {
    let denom = (se_a * se_a + se_b * se_b).sqrt();
    if denom == 0.0 {
        if a == b {
            Ok(0.0)
        } else {
            Err(Error::InvalidParam(format!(
                "z-score: estimates {a} and {b} differ but both report zero stderr"
            )))
        }
    } else {
        Ok((a - b) / denom)
    }
}

pub struct RowResult {
    pub cfg: ExperimentConfig,
    pub crude: CrudeRun,
    pub method: MethodRun,
    pub crude_greeks: Option<CrudeGreeks>,
    pub z: f64,
    pub delta_z: Option<f64>,
    pub runtime_ms: Option<u128>,
    pub seed_used: u64,
}

impl RowResult {
    /// Per-path standard deviation of the method estimator.
    pub fn method_sd(&self) -> f64 {
        self.method.correction_sd
    }

    /// Crude-to-method variance ratio at equal path counts. None means the
    /// method variance is exactly zero.
    pub fn variance_ratio(&self) -> Option<f64> {
        let msd = self.method_sd();
        if msd == 0.0 {
            None
        } else {
            Some((self.crude.sd / msd).powi(2))
        }
    }

    pub fn delta_variance_ratio(&self) -> Option<Option<f64>> {
        let (m, c) = (self.method.delta?, self.crude_greeks?);
        Some(if m.sd == 0.0 {
            None
        } else {
            Some((c.delta_sd / m.sd).powi(2))
        })
    }

    /// Whether the method and benchmark agree within the reporting band.
    pub fn within_band(&self) -> bool {
        self.z.abs() < 4.0 && self.delta_z.map_or(true, |z| z.abs() < 4.0)
    }
}

pub fn run_row(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RowResult> {
    let mut cfg = cfg.clone();
    if let Some(p) = opts.paths_override {
        cfg.paths = p;
    }
    if let Some(p) = opts.benchmark_paths_override {
        cfg.benchmark_paths = p;
    }
    if let Some(s) = opts.seed_override {
        cfg.seed = s;
    }
    if opts.force_greeks {
        cfg.greeks = true;
    }

    let asm = assemble(&cfg, opts.quad)?;
    let start = Instant::now();

    let est = Estimator {
        model: &asm.model,
        grid: &asm.grid,
        loadings: &asm.loadings,
        pricer: asm.pricer.as_ref(),
        spec: asm.payoff.observable_spec(),
        fd: FdParams::default(),
    };
    let greeks = cfg.greeks.then_some(GreekSettings {
        asset: asm.greek_asset,
        bump: opts.greek_bump,
    });
    let method = est.run(cfg.paths, cfg.seed, &asm.scheme.weights, greeks)?;

    let bench_seed = cfg.seed.wrapping_add(BENCHMARK_SEED_OFFSET);
    let crude = run_crude(
        &asm.model,
        &asm.grid,
        &asm.loadings,
        &asm.payoff,
        cfg.benchmark_paths,
        bench_seed,
    )?;
    let crude_greeks = if cfg.greeks {
        Some(run_crude_greeks(
            &asm.model,
            &asm.grid,
            &asm.loadings,
            &asm.payoff,
            cfg.benchmark_paths,
            bench_seed,
            asm.greek_asset,
            opts.benchmark_bump,
        )?)
    } else {
        None
    };

    let z = compute_z_score(method.price, method.price_se, crude.price, crude.se)?;
    let delta_z = match (&method.delta, &crude_greeks) {
        (Some(d), Some(c)) => Some(compute_z_score(d.value, d.se, c.delta, c.delta_se)?),
        _ => None,
    };

    let runtime_ms = opts.timings.then(|| start.elapsed().as_millis());
    let seed_used = cfg.seed;
    Ok(RowResult {
        cfg,
        crude,
        method,
        crude_greeks,
        z,
        delta_z,
        runtime_ms,
        seed_used,
    })
}

pub const CSV_HEADER: &str = "dynamics,payoff,simplified,maturity,strike,crude_estimate,\
crude_se,method_estimate,method_se,z_score,variance_ratio,crude_delta,crude_delta_se,delta,\
delta_se,delta_z,delta_var_ratio,runtime_ms,seed";

fn fmt_vr(vr: Option<f64>) -> String {
    match vr {
        Some(v) => format!("{v:.16e}"),
        None => "inf".into(),
    }
}

pub fn write_csv<W: Write>(w: &mut W, rows: &[RowResult]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let greek_cols = match (&r.method.delta, &r.crude_greeks) {
            (Some(d), Some(c)) => format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                c.delta,
                c.delta_se,
                d.value,
                d.se,
                r.delta_z.expect("greeks present"),
                fmt_vr(r.delta_variance_ratio().expect("greeks present")),
            ),
            _ => ",,,,,".into(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}",
            r.cfg.dynamics.name(),
            r.cfg.payoff.name(),
            r.cfg.simplified.name(),
            r.cfg.maturity,
            r.cfg.strike,
            r.crude.price,
            r.crude.se,
            r.method.price,
            r.method.price_se,
            r.z,
            fmt_vr(r.variance_ratio()),
            greek_cols,
            r.runtime_ms.map(|m| m.to_string()).unwrap_or_default(),
            r.seed_used,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;
    use approx::assert_abs_diff_eq;

    fn cfg_from(text: &str) -> ExperimentConfig {
        let (mut exps, _) = config::parse(text).unwrap();
        exps.remove(0)
    }

    #[test]
    fn reference_vol_matching() {
        let heston_black = cfg_from(
            r#"[[experiment]]
            dynamics = "heston"
            payoff = "vanilla"
            simplified = "black"
            maturity = 1.0
            strike = 105.0
            dt = 0.01
            rate = 0.05"#,
        );
        assert_eq!(reference_vols(&heston_black), vec![0.1]);

        let heston_bach = ExperimentConfig {
            simplified: SimplifiedKind::Bachelier,
            ..heston_black.clone()
        };
        assert_eq!(reference_vols(&heston_bach), vec![10.0]);

        let sabr = cfg_from(
            r#"[[experiment]]
            dynamics = "sabr"
            payoff = "vanilla"
            simplified = "black"
            maturity = 1.0
            strike = 100.0
            dt = 0.01"#,
        );
        assert_abs_diff_eq!(reference_vols(&sabr)[0], 0.25, epsilon = 1e-12);
        let sabr_bach = ExperimentConfig {
            simplified: SimplifiedKind::Bachelier,
            ..sabr
        };
        assert_abs_diff_eq!(reference_vols(&sabr_bach)[0], 25.0, epsilon = 1e-12);
    }

    #[test]
    fn greek_asset_is_highest_vol() {
        let cfg = cfg_from(
            r#"[[experiment]]
            dynamics = "sabr"
            payoff = "basket"
            simplified = "bachelier"
            maturity = 1.0
            strike = 100.0
            n_assets = 3
            dt = 0.01
            v0 = [1.8, 2.2, 2.0]"#,
        );
        assert_eq!(greek_asset(&cfg), 1);
    }

    #[test]
    fn assemble_wires_fixings_into_grid_and_scheme() {
        let cfg = cfg_from(
            r#"[[experiment]]
            dynamics = "heston"
            payoff = "asian"
            simplified = "bachelier"
            maturity = 1.0
            strike = 103.0
            dt = 0.01
            rate = 0.05"#,
        );
        let asm = assemble(&cfg, QuadRule::Legendre { nodes: 6 }).unwrap();
        // 4 segments between fixings
        assert_eq!(asm.scheme.times.len(), 24);
        assert_eq!(asm.grid.fixing_idx.len(), 4);
        assert_eq!(asm.grid.record_idx.len(), 24);
        assert_eq!(asm.pricer.name(), "bachelier-asian");
    }

    #[test]
    fn unsupported_pairing_is_rejected() {
        let cfg = cfg_from(
            r#"[[experiment]]
            dynamics = "heston"
            payoff = "asian"
            simplified = "black"
            maturity = 1.0
            strike = 103.0
            dt = 0.01"#,
        );
        assert!(build_pricer(&cfg, 0.01).is_err());
    }

    #[test]
    fn z_score_degenerate_cases() {
        assert_eq!(compute_z_score(1.0, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(compute_z_score(1.0, 0.0, 2.0, 0.0).is_err());
        assert_abs_diff_eq!(
            compute_z_score(1.0, 0.3, 2.0, 0.4).unwrap(),
            -2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn twin_row_writes_inf_variance_ratio() {
        let cfg = cfg_from(
            r#"[[experiment]]
            dynamics = "lognormal"
            payoff = "vanilla"
            simplified = "black"
            maturity = 1.0
            strike = 105.0
            dt = 0.03125
            rate = 0.05
            sigma = 0.2
            paths = 50
            benchmark_paths = 200
            greeks = true"#,
        );
        let mut opts = RunOptions {
            quad: QuadRule::Legendre { nodes: 4 },
            greek_bump: 1e-4,
            benchmark_bump: 1e-2,
            timings: false,
            paths_override: None,
            benchmark_paths_override: None,
            seed_override: None,
            force_greeks: false,
        };
        let row = run_row(&cfg, &opts).unwrap();
        assert_eq!(row.method.price_se, 0.0);
        assert!(row.variance_ratio().is_none());
        assert!(row.z.abs() < 4.0);
        assert!(row.within_band());

        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 19);
        assert_eq!(fields[0], "lognormal");
        assert_eq!(fields[10], "inf");
        assert_eq!(fields[16], "inf");
        assert_eq!(fields[17], "");

        // reruns without timings are byte-identical
        opts.timings = false;
        let again = run_row(&cfg, &opts).unwrap();
        let mut buf2 = Vec::new();
        write_csv(&mut buf2, &[again]).unwrap();
        assert_eq!(text, String::from_utf8(buf2).unwrap());
    }
}
