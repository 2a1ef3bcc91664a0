//! Plain Monte Carlo benchmarks: average terminal payoffs and
//! bump-and-revalue sensitivities with common random numbers.
//!
//! These run on the same time grid as the corrected estimator so that both
//! sides carry identical discretization bias and differences are purely
//! statistical.

use crate::corr::FactorLoadings;
use crate::grid::TimeGrid;
use crate::model::Model;
use crate::payoff::Payoff;
use crate::simulate::{mean_stderr, par_map_paths, seed_rng, PathEngine};
use crate::Result;

/// Sample statistics of the terminal payoff (no discounting applied).
#[derive(Clone, Copy, Debug)]
pub struct CrudeRun {
    pub price: f64,
    pub se: f64,
    pub sd: f64,
    pub n_paths: usize,
}

pub fn run_crude(
    model: &Model,
    grid: &TimeGrid,
    loadings: &FactorLoadings,
    payoff: &Payoff,
    n_paths: usize,
    seed: u64,
) -> Result<CrudeRun> {
    payoff.check_dimension(model.n_assets())?;
    let engine = PathEngine::new(model, grid, loadings, payoff.observable_spec());
    let zs = par_map_paths(
        n_paths,
        seed,
        || engine.workspace(),
        |_p, rng, ws| {
            engine.run(rng, ws, |_, _, _, _, _, _| {});
            payoff.terminal(&ws.f, &ws.obs)
        },
    );
    let (m, se, sd) = mean_stderr(&zs);
    Ok(CrudeRun {
        price: m,
        se,
        sd,
        n_paths,
    })
}

/// Forward-measure sensitivities of the undiscounted expectation to the
/// initial spot of one asset, by central bumping with shared normals.
#[derive(Clone, Copy, Debug)]
pub struct CrudeGreeks {
    pub delta: f64,
    pub delta_se: f64,
    pub delta_sd: f64,
    pub gamma: f64,
    pub gamma_se: f64,
    pub gamma_sd: f64,
    pub n_paths: usize,
}

pub fn run_crude_greeks(
    model: &Model,
    grid: &TimeGrid,
    loadings: &FactorLoadings,
    payoff: &Payoff,
    n_paths: usize,
    seed: u64,
    asset: usize,
    rel_bump: f64,
) -> Result<CrudeGreeks> {
    payoff.check_dimension(model.n_assets())?;
    let spec = payoff.observable_spec();
    let base = PathEngine::new(model, grid, loadings, spec);
    let model_up = model.with_bumped_spot(asset, 1.0 + rel_bump);
    let model_dn = model.with_bumped_spot(asset, 1.0 - rel_bump);
    let up = PathEngine::new(&model_up, grid, loadings, spec);
    let dn = PathEngine::new(&model_dn, grid, loadings, spec);
    let dx = rel_bump * model.market.spot[asset];

    let terms: Vec<(f64, f64)> = par_map_paths(
        n_paths,
        seed,
        || base.workspace(),
        |p, rng, ws| {
            let mut payoff_of = |eng: &PathEngine, r: &mut rand_chacha::ChaCha8Rng| {
                eng.run(r, ws, |_, _, _, _, _, _| {});
                payoff.terminal(&ws.f, &ws.obs)
            };
            let z0 = payoff_of(&base, rng);
            let zu = payoff_of(&up, &mut seed_rng(seed, p as u64));
            let zd = payoff_of(&dn, &mut seed_rng(seed, p as u64));
            ((zu - zd) / (2.0 * dx), (zu - 2.0 * z0 + zd) / (dx * dx))
        },
    );
    let d: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let g: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let (dm, dse, dsd) = mean_stderr(&d);
    let (gm, gse, gsd) = mean_stderr(&g);
    Ok(CrudeGreeks {
        delta: dm,
        delta_se: dse,
        delta_sd: dsd,
        gamma: gm,
        gamma_se: gse,
        gamma_sd: gsd,
        n_paths,
    })
}
