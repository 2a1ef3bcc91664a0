//! Forward-measure Euler simulation with per-path random streams.
//!
//! Draw order per step is fixed across all model kinds: first the factor
//! normals for the level drivers, then one vol normal per asset (consumed
//! even by constant-vol models). Paths with the same seed and index are
//! therefore comparable across models and thread counts.

use crate::corr::FactorLoadings;
use crate::grid::TimeGrid;
use crate::model::Model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Path functionals observed so far, on the spot scale.
///
/// At a record time these hold the strictly-before view: the state at the
/// record time itself is not yet folded in. After a full path run they cover
/// every grid time including expiry. Only the first asset is tracked; payoffs
/// with path observables are single-asset.
#[derive(Clone, Copy, Debug)]
pub struct Observables {
    pub spot_min: f64,
    pub fixing_sum: f64,
    pub fixings_seen: usize,
}

impl Observables {
    pub fn fresh() -> Self {
        Self {
            spot_min: f64::INFINITY,
            fixing_sum: 0.0,
            fixings_seen: 0,
        }
    }

    /// View of the observables after scaling the whole path of the first
    /// asset multiplicatively; used by pathwise sensitivity bumps.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            spot_min: self.spot_min * factor,
            fixing_sum: self.fixing_sum * factor,
            fixings_seen: self.fixings_seen,
        }
    }
}

impl Default for Observables {
    fn default() -> Self {
        Self::fresh()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ObservableSpec {
    pub track_min: bool,
}

pub struct PathEngine<'a> {
    pub model: &'a Model,
    pub grid: &'a TimeGrid,
    pub loadings: &'a FactorLoadings,
    pub spec: ObservableSpec,
    f0: Vec<f64>,
    v0: Vec<f64>,
    deflators: Vec<f64>,
}

/// Reusable per-thread scratch buffers.
pub struct PathWorkspace {
    pub f: Vec<f64>,
    pub v: Vec<f64>,
    pub c: Vec<f64>,
    z: Vec<f64>,
    dw: Vec<f64>,
    zv: Vec<f64>,
    pub obs: Observables,
}

impl PathWorkspace {
    pub fn new(d: usize, r: usize) -> Self {
        Self {
            f: vec![0.0; d],
            v: vec![0.0; d],
            c: vec![0.0; d],
            z: vec![0.0; r],
            dw: vec![0.0; d],
            zv: vec![0.0; d],
            obs: Observables::fresh(),
        }
    }
}

pub fn seed_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

impl<'a> PathEngine<'a> {
    pub fn new(
        model: &'a Model,
        grid: &'a TimeGrid,
        loadings: &'a FactorLoadings,
        spec: ObservableSpec,
    ) -> Self {
        let f0 = model.forward0(grid.maturity);
        let v0 = model.dynamics.vol_init();
        let deflators = grid
            .times
            .iter()
            .map(|&t| model.deflator(t, grid.maturity))
            .collect();
        Self {
            model,
            grid,
            loadings,
            spec,
            f0,
            v0,
            deflators,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.f0.len()
    }

    pub fn forward0(&self) -> &[f64] {
        &self.f0
    }

    pub fn workspace(&self) -> PathWorkspace {
        PathWorkspace::new(self.n_assets(), self.loadings.n_factors())
    }

    /// Simulate one path. `on_record` fires at every record time in order,
    /// receiving the record slot, the time, the forwards, vol states, level
    /// diffusion coefficients, and the strictly-before observables. On return
    /// the workspace holds the terminal forwards and full-horizon observables.
    pub fn run<F>(&self, rng: &mut ChaCha8Rng, ws: &mut PathWorkspace, mut on_record: F)
    where
        F: FnMut(usize, f64, &[f64], &[f64], &[f64], Observables),
    {
        let d = self.f0.len();
        let r = self.loadings.n_factors();
        let dynamics = &self.model.dynamics;
        let times = &self.grid.times;
        let record_idx = &self.grid.record_idx;
        let fixing_idx = &self.grid.fixing_idx;
        let rho = dynamics.rho_sv();
        let srho = (1.0 - rho * rho).sqrt();

        ws.f.copy_from_slice(&self.f0);
        ws.v.copy_from_slice(&self.v0);
        ws.obs = Observables::fresh();

        let mut rec_ptr = 0;
        let mut fix_ptr = 0;
        for i in 0..times.len() {
            let t = times[i];
            while rec_ptr < record_idx.len() && record_idx[rec_ptr] == i {
                for k in 0..d {
                    ws.c[k] = dynamics.diffusion(ws.f[k], ws.v[k]);
                }
                on_record(rec_ptr, t, &ws.f, &ws.v, &ws.c, ws.obs);
                rec_ptr += 1;
            }
            if self.spec.track_min {
                let s = ws.f[0] * self.deflators[i];
                if s < ws.obs.spot_min {
                    ws.obs.spot_min = s;
                }
            }
            if fix_ptr < fixing_idx.len() && fixing_idx[fix_ptr] == i {
                ws.obs.fixing_sum += ws.f[0] * self.deflators[i];
                ws.obs.fixings_seen += 1;
                fix_ptr += 1;
            }
            if i + 1 == times.len() {
                break;
            }
            let dt = times[i + 1] - t;
            let sq = dt.sqrt();
            for zi in ws.z.iter_mut().take(r) {
                *zi = rng.sample(StandardNormal);
            }
            self.loadings.mix(&ws.z[..r], &mut ws.dw);
            for zi in ws.zv.iter_mut().take(d) {
                *zi = rng.sample(StandardNormal);
            }
            for k in 0..d {
                let c = dynamics.diffusion(ws.f[k], ws.v[k]);
                let dwk = ws.dw[k] * sq;
                let dzk = (rho * ws.dw[k] + srho * ws.zv[k]) * sq;
                ws.f[k] = dynamics.clamp_level(ws.f[k] + c * dwk);
                ws.v[k] = dynamics.step_vol_asset(k, ws.v[k], dzk, dt);
            }
        }
        debug_assert_eq!(rec_ptr, record_idx.len());
    }
}

/// Map a function over paths in parallel with reusable per-thread state.
/// Results come back indexed by path, so reductions downstream are
/// independent of the thread count.
pub fn par_map_paths<T, W, MW, F>(n_paths: usize, seed: u64, make_ws: MW, f: F) -> Vec<T>
where
    T: Send,
    W: Send,
    MW: Fn() -> W + Sync + Send,
    F: Fn(usize, &mut ChaCha8Rng, &mut W) -> T + Sync + Send,
{
    (0..n_paths)
        .into_par_iter()
        .map_init(&make_ws, |ws, p| {
            let mut rng = seed_rng(seed, p as u64);
            f(p, &mut rng, ws)
        })
        .collect()
}

/// Fully materialized simulation output for small runs and tests.
pub struct PathSet {
    pub record_times: Vec<f64>,
    pub n_paths: usize,
    pub n_assets: usize,
    /// Layout: [(path * n_records + slot) * n_assets + asset]
    pub forwards: Vec<f64>,
    pub vols: Vec<f64>,
    pub diffusions: Vec<f64>,
    /// Strictly-before observables per (path, record slot).
    pub cond: Vec<Observables>,
    pub terminal: Vec<f64>,
    pub terminal_obs: Vec<Observables>,
}

pub fn collect_paths(engine: &PathEngine, n_paths: usize, seed: u64) -> PathSet {
    let d = engine.n_assets();
    let n_rec = engine.grid.record_idx.len();
    struct Chunk {
        states: Vec<f64>,
        vols: Vec<f64>,
        diffs: Vec<f64>,
        cond: Vec<Observables>,
        terminal: Vec<f64>,
        obs: Observables,
    }
    let chunks = par_map_paths(
        n_paths,
        seed,
        || engine.workspace(),
        |_p, rng, ws| {
            let mut states = Vec::with_capacity(n_rec * d);
            let mut vols = Vec::with_capacity(n_rec * d);
            let mut diffs = Vec::with_capacity(n_rec * d);
            let mut cond = Vec::with_capacity(n_rec);
            engine.run(rng, ws, |_slot, _t, f, v, c, o| {
                states.extend_from_slice(f);
                vols.extend_from_slice(v);
                diffs.extend_from_slice(c);
                cond.push(o);
            });
            Chunk {
                states,
                vols,
                diffs,
                cond,
                terminal: ws.f.clone(),
                obs: ws.obs,
            }
        },
    );
    let mut out = PathSet {
        record_times: engine
            .grid
            .record_idx
            .iter()
            .map(|&i| engine.grid.times[i])
            .collect(),
        n_paths,
        n_assets: d,
        forwards: Vec::with_capacity(n_paths * n_rec * d),
        vols: Vec::with_capacity(n_paths * n_rec * d),
        diffusions: Vec::with_capacity(n_paths * n_rec * d),
        cond: Vec::with_capacity(n_paths * n_rec),
        terminal: Vec::with_capacity(n_paths * d),
        terminal_obs: Vec::with_capacity(n_paths),
    };
    for ch in chunks {
        out.forwards.extend_from_slice(&ch.states);
        out.vols.extend_from_slice(&ch.vols);
        out.diffusions.extend_from_slice(&ch.diffs);
        out.cond.extend_from_slice(&ch.cond);
        out.terminal.extend_from_slice(&ch.terminal);
        out.terminal_obs.push(ch.obs);
    }
    out
}

/// Mean and standard error of a sample, two-pass for determinism and
/// stability. Returns (mean, stderr, sd).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    (mean, sd / (n as f64).sqrt(), sd)
}
