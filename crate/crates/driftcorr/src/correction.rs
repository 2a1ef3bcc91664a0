//! The correction integrand and the estimator built around it.
//!
//! The price of a claim with terminal payoff Z is written as
//!
//!   E[Z] = psi(0, F_0) + E[ integral_0^T xi(t, F_t) dt ]
//!
//! where psi is the value function of a simplified reference model that
//! matches Z at expiry, and xi measures the mismatch between the true and
//! the reference generator applied to psi:
//!
//!   xi = 1/2 sum_i ( D^2 psi[u_i, u_i] - D^2 psi[w_i, w_i] )
//!
//! with u_i (resp. w_i) the factor loadings scaled by the model (resp.
//! reference) diffusion coefficients. Only second derivatives along factor
//! directions are needed, so one evaluation of xi costs at most 4R + 1
//! evaluations of psi for R driving factors.
//!
//! Deltas and gammas reuse the same paths: when level paths scale with the
//! initial level, the spot derivative of the correction integral is the
//! time integral of F_t/F_0 times the level derivative of xi, taken at a
//! frozen volatility state. The reference sensitivities at the initial
//! state come from the pricer in closed form.

use crate::corr::FactorLoadings;
use crate::grid::TimeGrid;
use crate::math::quadrature::GaussLegendre;
use crate::model::Model;
use crate::pricers::StatePricer;
use crate::simulate::{mean_stderr, par_map_paths, Observables, ObservableSpec, PathEngine};
use crate::{Error, Result};

/// Quadrature rule for the time integral of the correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadRule {
    /// Left endpoints of a uniform partition with spacing `dt`.
    LeftRiemann { dt: f64 },
    /// Gauss-Legendre with `nodes` points per smooth segment.
    Legendre { nodes: usize },
}

/// Evaluation times and weights for the time integral.
#[derive(Clone, Debug)]
pub struct NodeScheme {
    pub times: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Build the node scheme on [0, maturity]. `cuts` lists interior times where
/// the integrand may lose smoothness (fixing dates); Gauss rules are applied
/// per segment between consecutive cuts, the Riemann rule ignores them.
pub fn build_scheme(rule: QuadRule, maturity: f64, cuts: &[f64]) -> Result<NodeScheme> {
    if maturity <= 0.0 {
        return Err(Error::InvalidParam("scheme: maturity must be positive".into()));
    }
    match rule {
        QuadRule::LeftRiemann { dt } => {
            if dt <= 0.0 {
                return Err(Error::InvalidParam("scheme: dt must be positive".into()));
            }
            let n = (maturity / dt).round().max(1.0) as usize;
            let h = maturity / n as f64;
            Ok(NodeScheme {
                times: (0..n).map(|i| i as f64 * h).collect(),
                weights: vec![h; n],
            })
        }
        QuadRule::Legendre { nodes } => {
            let gl = GaussLegendre::new(nodes)?;
            let tol = 1e-10 * maturity.max(1.0);
            let mut edges = vec![0.0];
            let mut interior: Vec<f64> = cuts
                .iter()
                .copied()
                .filter(|&c| c > tol && c < maturity - tol)
                .collect();
            interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for c in interior {
                if c - edges.last().unwrap() > tol {
                    edges.push(c);
                }
            }
            edges.push(maturity);
            let mut times = Vec::with_capacity(nodes * (edges.len() - 1));
            let mut weights = Vec::with_capacity(times.capacity());
            for seg in edges.windows(2) {
                for (x, w) in gl.mapped(seg[0], seg[1]) {
                    times.push(x);
                    weights.push(w);
                }
            }
            Ok(NodeScheme { times, weights })
        }
    }
}

/// Finite-difference controls for derivatives of the value function.
#[derive(Clone, Copy, Debug)]
pub struct FdParams {
    /// Relative step for second derivatives, scaled by max(|x|_inf, 1).
    pub rel_step: f64,
    /// Directions shorter than this contribute nothing.
    pub min_dir_norm: f64,
}

impl Default for FdParams {
    fn default() -> Self {
        Self {
            rel_step: 1e-3,
            min_dir_norm: 1e-14,
        }
    }
}

struct DirBufs {
    xp: Vec<f64>,
    xm: Vec<f64>,
    psi_evals: u64,
    fd_shrinks: u64,
}

/// Scratch buffers and evaluation counters for the integrand.
pub struct XiWorkspace {
    dir: Vec<f64>,
    sig: Vec<f64>,
    bufs: DirBufs,
}

impl XiWorkspace {
    pub fn new(d: usize) -> Self {
        Self {
            dir: vec![0.0; d],
            sig: vec![0.0; d],
            bufs: DirBufs {
                xp: vec![0.0; d],
                xm: vec![0.0; d],
                psi_evals: 0,
                fd_shrinks: 0,
            },
        }
    }

    pub fn psi_evals(&self) -> u64 {
        self.bufs.psi_evals
    }

    pub fn fd_shrinks(&self) -> u64 {
        self.bufs.fd_shrinks
    }
}

/// ||u||^2 times the second derivative of the value along u/||u||, by a
/// central difference sharing the precomputed center value.
fn dir_second(
    pricer: &dyn StatePricer,
    fd: &FdParams,
    t: f64,
    x: &[f64],
    cond: &Observables,
    center: f64,
    dir: &[f64],
    bufs: &mut DirBufs,
) -> f64 {
    let norm2: f64 = dir.iter().map(|u| u * u).sum();
    let norm = norm2.sqrt();
    if norm < fd.min_dir_norm {
        return 0.0;
    }
    let xinf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut delta = fd.rel_step * xinf.max(1.0);
    if let Some(floor) = pricer.fd_floor(t) {
        // keep both stencil points on the smooth side of the floor for every
        // coordinate that starts above it
        let crosses = |delta: f64| {
            x.iter().zip(dir).any(|(&xk, &uk)| {
                let step = delta * uk.abs() / norm;
                step > 0.0 && xk > floor && xk - step <= floor
            })
        };
        let mut n = 0;
        while n < 60 && crosses(delta) {
            delta *= 0.5;
            n += 1;
        }
        if n > 0 {
            bufs.fd_shrinks += 1;
        }
    }
    for k in 0..x.len() {
        let step = delta * dir[k] / norm;
        bufs.xp[k] = x[k] + step;
        bufs.xm[k] = x[k] - step;
    }
    bufs.psi_evals += 2;
    let vp = pricer.value(t, &bufs.xp, cond);
    let vm = pricer.value(t, &bufs.xm, cond);
    norm2 * (vp - 2.0 * center + vm) / (delta * delta)
}

/// The correction integrand at one path state. `diffusion` holds the model's
/// level diffusion coefficients per asset at this state.
#[allow(clippy::too_many_arguments)]
pub fn xi(
    pricer: &dyn StatePricer,
    loadings: &FactorLoadings,
    fd: &FdParams,
    t: f64,
    x: &[f64],
    diffusion: &[f64],
    cond: &Observables,
    ws: &mut XiWorkspace,
) -> f64 {
    if pricer.knocked_out(cond) {
        return 0.0;
    }
    let d = x.len();
    let r = loadings.n_factors();
    ws.bufs.psi_evals += 1;
    let center = pricer.value(t, x, cond);
    pricer.local_vol(t, x, &mut ws.sig);

    // per factor, the model term and the reference term share the direction
    // shape and are differenced immediately, so identical diffusion
    // coefficients cancel exactly
    let mut acc = 0.0;
    for i in 0..r {
        for k in 0..d {
            ws.dir[k] = diffusion[k] * loadings.entry(k, i);
        }
        let dm = dir_second(pricer, fd, t, x, cond, center, &ws.dir, &mut ws.bufs);
        for k in 0..d {
            ws.dir[k] = ws.sig[k] * loadings.entry(k, i);
        }
        let dr = dir_second(pricer, fd, t, x, cond, center, &ws.dir, &mut ws.bufs);
        acc += dm - dr;
    }
    0.5 * acc
}

/// Pathwise first and second derivative settings for the estimator.
#[derive(Clone, Copy, Debug)]
pub struct GreekSettings {
    /// Asset whose initial spot the sensitivities refer to.
    pub asset: usize,
    /// Relative step for the level derivative of the integrand.
    pub bump: f64,
}

impl Default for GreekSettings {
    fn default() -> Self {
        Self {
            asset: 0,
            bump: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Greek {
    pub value: f64,
    pub se: f64,
    pub sd: f64,
}

/// One full estimator run.
#[derive(Clone, Debug)]
pub struct MethodRun {
    /// Reference value at the initial state (undiscounted, on forwards).
    pub psi0: f64,
    /// Expected payoff at maturity: psi0 plus the mean correction.
    pub price: f64,
    pub price_se: f64,
    /// Sample statistics of the path correction J = sum_k w_k xi_k.
    pub correction_mean: f64,
    pub correction_sd: f64,
    pub max_abs_xi: f64,
    pub n_paths: usize,
    /// Sensitivities of the expected payoff to the initial spot.
    pub delta: Option<Greek>,
    pub gamma: Option<Greek>,
    /// Whether the pathwise level scaling behind the greeks holds exactly
    /// for these dynamics, or only as an approximation.
    pub delta_scaling_exact: Option<bool>,
    pub psi_evals: u64,
    pub fd_shrinks: u64,
}

pub struct Estimator<'a> {
    pub model: &'a Model,
    pub grid: &'a TimeGrid,
    pub loadings: &'a FactorLoadings,
    pub pricer: &'a dyn StatePricer,
    pub spec: ObservableSpec,
    pub fd: FdParams,
}

struct PathOut {
    j: f64,
    dterm: f64,
    gterm: f64,
    max_xi: f64,
    evals: u64,
    shrinks: u64,
}

struct BumpScratch {
    x: Vec<f64>,
    c: Vec<f64>,
}

impl<'a> Estimator<'a> {
    /// Run the estimator over `n_paths` paths. `weights` must align with the
    /// record slots of the grid.
    ///
    /// With `greeks` set, each node also contributes central differences of
    /// the integrand in one level coordinate, scaled by F_t / F_0 along the
    /// path. That is the pathwise spot derivative when level paths scale
    /// with the initial level; dynamics without that structure are rejected.
    pub fn run(
        &self,
        n_paths: usize,
        seed: u64,
        weights: &[f64],
        greeks: Option<GreekSettings>,
    ) -> Result<MethodRun> {
        if weights.len() != self.grid.record_idx.len() {
            return Err(Error::InvalidParam(format!(
                "estimator: {} weights for {} record slots",
                weights.len(),
                self.grid.record_idx.len()
            )));
        }
        if n_paths == 0 {
            return Err(Error::InvalidParam("estimator: no paths".into()));
        }
        let d = self.model.n_assets();
        if self.pricer.dim() != d {
            return Err(Error::InvalidParam(format!(
                "estimator: pricer expects {} assets, model has {}",
                self.pricer.dim(),
                d
            )));
        }
        if let Some(gs) = &greeks {
            if gs.asset >= d {
                return Err(Error::InvalidParam(format!(
                    "estimator: greek asset {} out of range for {} assets",
                    gs.asset, d
                )));
            }
            if self.model.dynamics.pathwise_scaling().is_none() {
                return Err(Error::InvalidParam(
                    "estimator: pathwise greeks need dynamics whose level paths \
                     scale with the initial level; bump the spot and rerun instead"
                        .into(),
                ));
            }
        }

        let engine = PathEngine::new(self.model, self.grid, self.loadings, self.spec);
        let f0: Vec<f64> = engine.forward0().to_vec();

        let outs: Vec<PathOut> = par_map_paths(
            n_paths,
            seed,
            || {
                (
                    engine.workspace(),
                    XiWorkspace::new(d),
                    BumpScratch {
                        x: vec![0.0; d],
                        c: vec![0.0; d],
                    },
                )
            },
            |_p, rng, (pws, xws, scratch)| {
                let e0 = xws.psi_evals();
                let s0 = xws.fd_shrinks();
                let mut j = 0.0;
                let (mut dterm, mut gterm) = (0.0, 0.0);
                let mut mx = 0.0f64;
                engine.run(rng, pws, |slot, t, f, v, c, o| {
                    let w = weights[slot];
                    let xic = xi(self.pricer, self.loadings, &self.fd, t, f, c, &o, xws);
                    j += w * xic;
                    mx = mx.max(xic.abs());
                    let Some(gs) = &greeks else { return };
                    let a = gs.asset;
                    let fa = f[a];
                    // at zero level the scaling factor F_t / F_0 vanishes,
                    // so the node contributes nothing
                    if fa <= 0.0 {
                        return;
                    }
                    let h = gs.bump * fa;
                    scratch.x.copy_from_slice(f);
                    scratch.c.copy_from_slice(c);
                    scratch.x[a] = fa + h;
                    scratch.c[a] = self.model.dynamics.diffusion(fa + h, v[a]);
                    let xip = xi(
                        self.pricer,
                        self.loadings,
                        &self.fd,
                        t,
                        &scratch.x,
                        &scratch.c,
                        &o,
                        xws,
                    );
                    scratch.x[a] = fa - h;
                    scratch.c[a] = self.model.dynamics.diffusion(fa - h, v[a]);
                    let xim = xi(
                        self.pricer,
                        self.loadings,
                        &self.fd,
                        t,
                        &scratch.x,
                        &scratch.c,
                        &o,
                        xws,
                    );
                    let rel = fa / f0[a];
                    dterm += w * rel * (xip - xim) / (2.0 * h);
                    gterm += w * rel * rel * (xip - 2.0 * xic + xim) / (h * h);
                });
                PathOut {
                    j,
                    dterm,
                    gterm,
                    max_xi: mx,
                    evals: xws.psi_evals() - e0,
                    shrinks: xws.fd_shrinks() - s0,
                }
            },
        );

        let js: Vec<f64> = outs.iter().map(|o| o.j).collect();
        let (jm, jse, jsd) = mean_stderr(&js);
        let psi0 = self.pricer.value0(&f0);

        let (delta, gamma, scaling) = if let Some(gs) = &greeks {
            let a = gs.asset;
            // d/dS0 = e^{rT} d/dF0 folds the spot-to-forward growth back in
            let growth = (self.model.market.rate * self.grid.maturity).exp();
            let g2 = growth * growth;
            let dterms: Vec<f64> = outs.iter().map(|o| o.dterm).collect();
            let gterms: Vec<f64> = outs.iter().map(|o| o.gterm).collect();
            let (dm, dse, dsd) = mean_stderr(&dterms);
            let (gm, gse, gsd) = mean_stderr(&gterms);
            (
                Some(Greek {
                    value: growth * (self.pricer.delta0(&f0, a) + dm),
                    se: growth * dse,
                    sd: growth * dsd,
                }),
                Some(Greek {
                    value: g2 * (self.pricer.gamma0(&f0, a) + gm),
                    se: g2 * gse,
                    sd: g2 * gsd,
                }),
                self.model.dynamics.pathwise_scaling(),
            )
        } else {
            (None, None, None)
        };

        Ok(MethodRun {
            psi0,
            price: psi0 + jm,
            price_se: jse,
            correction_mean: jm,
            correction_sd: jsd,
            max_abs_xi: outs.iter().fold(0.0f64, |m, o| m.max(o.max_xi)),
            n_paths,
            delta,
            gamma,
            delta_scaling_exact: scaling,
            psi_evals: outs.iter().map(|o| o.evals).sum(),
            fd_shrinks: outs.iter().map(|o| o.shrinks).sum(),
        })
    }

    /// Run several node schemes on the same paths. The grid must hold the
    /// merged record times; `tagged` assigns each record slot its scheme
    /// index and weight. Returns one run per scheme, in index order.
    pub fn run_tagged(
        &self,
        n_paths: usize,
        seed: u64,
        tagged: &[(usize, f64)],
        n_schemes: usize,
    ) -> Result<Vec<MethodRun>> {
        if tagged.len() != self.grid.record_idx.len() {
            return Err(Error::InvalidParam(format!(
                "estimator: {} tagged nodes for {} record slots",
                tagged.len(),
                self.grid.record_idx.len()
            )));
        }
        if n_paths == 0 || n_schemes == 0 {
            return Err(Error::InvalidParam("estimator: empty run".into()));
        }
        let d = self.model.n_assets();
        if self.pricer.dim() != d {
            return Err(Error::InvalidParam(format!(
                "estimator: pricer expects {} assets, model has {}",
                self.pricer.dim(),
                d
            )));
        }
        let engine = PathEngine::new(self.model, self.grid, self.loadings, self.spec);

        struct TaggedOut {
            j: Vec<f64>,
            max_xi: f64,
            evals: u64,
            shrinks: u64,
        }
        let outs: Vec<TaggedOut> = par_map_paths(
            n_paths,
            seed,
            || (engine.workspace(), XiWorkspace::new(d)),
            |_p, rng, (pws, xws)| {
                let e0 = xws.psi_evals();
                let s0 = xws.fd_shrinks();
                let mut j = vec![0.0; n_schemes];
                let mut mx = 0.0f64;
                engine.run(rng, pws, |slot, t, f, _v, c, o| {
                    let (scheme, w) = tagged[slot];
                    let v = xi(self.pricer, self.loadings, &self.fd, t, f, c, &o, xws);
                    j[scheme] += w * v;
                    mx = mx.max(v.abs());
                });
                TaggedOut {
                    j,
                    max_xi: mx,
                    evals: xws.psi_evals() - e0,
                    shrinks: xws.fd_shrinks() - s0,
                }
            },
        );

        let psi0 = self.pricer.value0(engine.forward0());
        let max_xi = outs.iter().fold(0.0f64, |m, o| m.max(o.max_xi));
        let evals: u64 = outs.iter().map(|o| o.evals).sum();
        let shrinks: u64 = outs.iter().map(|o| o.shrinks).sum();

        let mut runs = Vec::with_capacity(n_schemes);
        for s in 0..n_schemes {
            let js: Vec<f64> = outs.iter().map(|o| o.j[s]).collect();
            let (jm, jse, jsd) = mean_stderr(&js);
            runs.push(MethodRun {
                psi0,
                price: psi0 + jm,
                price_se: jse,
                correction_mean: jm,
                correction_sd: jsd,
                max_abs_xi: max_xi,
                n_paths,
                delta: None,
                gamma: None,
                delta_scaling_exact: None,
                psi_evals: evals,
                fd_shrinks: shrinks,
            });
        }
        Ok(runs)
    }
}
