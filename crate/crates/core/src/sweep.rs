//! Paired Jin-Xin / limit runs and ε-sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InitKind, Prepared, RunConfig};
use crate::diag::{error_norms, theorem_norms, ErrorHistories, RateReport};
use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralField};
use crate::jinxin::{random_perturbation, well_prepared_init, ModelParams, RelaxState, Stepper};
use crate::limit::{LimitState, LimitStepper};
use crate::lp::threshold;
use crate::rng;

/// `amplitude · cos(k·x)` in every component.
fn mode_field(grid: &Arc<Grid>, ncomp: usize, k: &[i64], amplitude: f64, sine: bool) -> SpectralField {
    SpectralField::from_fn(grid, ncomp, |_, x| {
        let phase: f64 = k.iter().zip(x.iter()).map(|(&ki, &xi)| ki as f64 * xi).sum();
        amplitude * if sine { phase.sin() } else { phase.cos() }
    })
}

/// Initial limit perturbation `u₀* - ū` on `grid`.
pub fn initial_limit(cfg: &RunConfig, grid: &Arc<Grid>) -> Result<SpectralField> {
    let init = &cfg.init;
    let n = cfg.model.n;
    match init.kind {
        InitKind::Random => random_perturbation(init.seed, rng::STREAM_INIT_U, init.amplitude, init.band, grid, n),
        InitKind::Mode => Ok(mode_field(grid, n, &init.mode, init.amplitude, false)),
    }
}

/// Initial relaxation state for `params`, built from the limit data `m0*`.
pub fn initial_state(cfg: &RunConfig, params: &ModelParams, m_star: &SpectralField) -> Result<RelaxState> {
    let init = &cfg.init;
    let grid = m_star.grid();
    let (d, n) = (params.dim(), params.n());
    let mut m0 = m_star.clone();
    if init.discrepancy != 0.0 {
        let shift = random_perturbation(init.seed, rng::STREAM_DISCREPANCY, init.amplitude, init.band, grid, n)?;
        m0.axpy(init.discrepancy * params.eps(), &shift);
    }
    match init.prepared {
        Prepared::Well => well_prepared_init(&m0, params),
        Prepared::Ill => {
            let w = match init.kind {
                InitKind::Random => random_perturbation(init.seed, rng::STREAM_INIT_W, init.amplitude, init.band, grid, d * n)?,
                InitKind::Mode => mode_field(grid, d * n, &init.mode, init.amplitude, true),
            };
            RelaxState::new(0.0, m0, w, params)
        }
    }
}

/// Step end points: `steps` equal steps of size `dt`, with the first one split
/// geometrically down to `layer / 16` when `dt` exceeds the layer time `layer`.
pub fn step_times(dt: f64, steps: usize, layer: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    if steps > 0 && dt > layer {
        let k = (16.0 * dt / layer).log2().ceil() as i32;
        out.extend((0..k).rev().map(|i| dt * 2f64.powi(-i - 1)));
    }
    out.extend((1..=steps).map(|k| k as f64 * dt));
    out
}

/// Outcome of one paired run at a single ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub eps: f64,
    pub dt: f64,
    pub steps: usize,
    pub j_eps: i32,
    pub norms: BTreeMap<String, f64>,
    /// Largest `|mean(m)(t) - mean(m)(0)|` over both solvers and all components.
    pub mass_drift: f64,
    /// Largest `‖(m, w)(t)‖_{L²} / ‖(m, w)(0)‖_{L²}`.
    pub max_growth: f64,
    /// Snapshot times with `‖u - u*‖_{L²}`, `‖v - v*‖_{L²}` and `‖z‖_{L²}`.
    pub series: Vec<[f64; 4]>,
}

fn state_norm(st: &RelaxState) -> f64 {
    st.m.l2_norm().hypot(st.w.l2_norm())
}

/// Simulates both systems on the shared schedule and evaluates the rate norms.
pub fn run_pair(cfg: &RunConfig, eps: f64) -> Result<RunOutcome> {
    let params = cfg.params_at(eps)?;
    let grid = cfg.grid()?;
    let filter = cfg.filter(&grid)?;
    let j_eps = threshold(eps, cfg.k0)?;
    let (dt, steps) = cfg.schedule();
    let stride = cfg.time.stride;

    let m_star0 = initial_limit(cfg, &grid)?;
    let mut state = initial_state(cfg, &params, &m_star0)?;
    let mut limit = LimitState::new(0.0, m_star0);
    let times = step_times(dt, steps, if cfg.time.resolve_layer { eps * eps } else { f64::INFINITY });
    let layer = times.len() - steps;
    let mut steppers: BTreeMap<u64, (Stepper, LimitStepper)> = BTreeMap::new();

    let n = params.n();
    let mean0: Vec<f64> = (0..n).map(|c| state.m.mean(c)).collect();
    let mean0_star: Vec<f64> = (0..n).map(|c| limit.m.mean(c)).collect();
    let norm0 = state_norm(&state);
    let mut drift = 0.0f64;
    let mut growth = 1.0f64;
    let mut hist = ErrorHistories::new(filter.j_min());
    let mut series = Vec::new();

    let mut observe = |st: &RelaxState, lim: &LimitState, hist: &mut ErrorHistories| -> Result<()> {
        hist.record(&filter, st, &lim.m, &params)?;
        let du = st.m.sub(&lim.m).l2_norm();
        let dv = st
            .w
            .scaled(1.0 / eps)
            .sub(&crate::limit::darcy_reconstruct(&lim.m, &params))
            .l2_norm();
        let z = crate::diag::effective_mode(st, &params).l2_norm();
        series.push([st.t, du, dv, z]);
        Ok(())
    };
    observe(&state, &limit, &mut hist)?;
    for (k, w) in times.windows(2).enumerate() {
        let h = w[1] - w[0];
        if !steppers.contains_key(&h.to_bits()) {
            let pair = (Stepper::new(&params, &grid, cfg.scheme, h)?, LimitStepper::new(&params, &grid, h)?);
            steppers.insert(h.to_bits(), pair);
        }
        let (stepper, lstepper) = &steppers[&h.to_bits()];
        stepper.step(&mut state)?;
        lstepper.step(&mut limit)?;
        state.t = w[1];
        limit.t = w[1];
        for c in 0..n {
            drift = drift
                .max((state.m.mean(c) - mean0[c]).abs())
                .max((limit.m.mean(c) - mean0_star[c]).abs());
        }
        if norm0 > 0.0 {
            growth = growth.max(state_norm(&state) / norm0);
        }
        let regular = (k + 2).saturating_sub(layer);
        if k + 1 < layer || regular % stride == 0 || k + 2 == times.len() {
            observe(&state, &limit, &mut hist)?;
        }
    }

    let norms = error_norms(&hist, &theorem_norms(params.dim(), &cfg.sigmas, j_eps))?;
    Ok(RunOutcome {
        eps,
        dt,
        steps,
        j_eps,
        norms,
        mass_drift: drift,
        max_growth: growth,
        series,
    })
}

/// Base configuration plus the ε list of a convergence study.
#[derive(Clone, Debug)]
pub struct SweepPlan {
    base: RunConfig,
    eps: Vec<f64>,
}

impl SweepPlan {
    pub fn new(base: RunConfig, eps: Vec<f64>) -> Result<Self> {
        if eps.len() < 3 {
            return Err(Error::invalid(format!("sweep needs at least 3 ε values, got {}", eps.len())));
        }
        if let Some(bad) = eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::invalid(format!("ε = {bad} ∉ (0,1)")));
        }
        let mut sorted = eps.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("sweep ε values must be distinct"));
        }
        let span = (sorted[sorted.len() - 1] / sorted[0]).log2();
        if span < 2.0 - 1e-12 {
            return Err(Error::invalid(format!("sweep spans {span:.3} octaves, at least 2 required")));
        }
        Ok(SweepPlan { base, eps })
    }

    /// Plan from `sweep.eps` in the configuration.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        SweepPlan::new(cfg.clone(), cfg.sweep_eps.clone())
    }

    pub fn base(&self) -> &RunConfig {
        &self.base
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub report: RateReport,
    pub runs: Vec<std::result::Result<RunOutcome, String>>,
}

/// Runs every ε independently in parallel; failures stay local to their ε.
pub fn run_sweep(plan: &SweepPlan) -> SweepResult {
    sweep_with(&plan.eps, |e| run_pair(&plan.base, e))
}

fn sweep_with(eps: &[f64], run: impl Fn(f64) -> Result<RunOutcome> + Sync) -> SweepResult {
    let runs: Vec<std::result::Result<RunOutcome, String>> =
        eps.par_iter().map(|&e| run(e).map_err(|err| err.to_string())).collect();
    let tables: Vec<_> = runs.iter().map(|r| r.as_ref().map(|o| o.norms.clone()).map_err(Clone::clone)).collect();
    SweepResult {
        report: RateReport::assemble(eps, &tables),
        runs,
    }
}

/// Writes `report.json`, `errors.csv` and one `series_eps{ε}.csv` per successful run.
pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&result.report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    let mut csv = String::from("eps,norm,value\n");
    for (name, column) in &result.report.errors {
        for (e, v) in result.report.eps.iter().zip(column) {
            match v {
                Some(v) => csv.push_str(&format!("{e:e},{name},{v:e}\n")),
                None => csv.push_str(&format!("{e:e},{name},\n")),
            }
        }
    }
    fs::write(dir.join("errors.csv"), csv)?;
    for run in result.runs.iter().flatten() {
        let mut s = String::from("t,u_err_l2,v_err_l2,z_l2\n");
        for row in &run.series {
            s.push_str(&format!("{:e},{:e},{:e},{:e}\n", row[0], row[1], row[2], row[3]));
        }
        fs::write(dir.join(format!("series_eps{:e}.csv", run.eps)), s)?;
    }
    Ok(())
}
