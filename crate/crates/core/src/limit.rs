//! Limit viscous conservation law and the Darcy-type reconstruction.
//!
//! `∂_t u* + Σ_i ∂_i f_i(u*) = Σ_i a_i ∂_i² u*`, advanced with the exact heat
//! semigroup as integrating factor and an explicit midpoint on the dealiased
//! flux divergence.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralField};
use crate::jinxin::{mode_geometry, ModeGeom, ModelParams};

/// Time plus the perturbation `u* - ū`.
#[derive(Clone, Debug)]
pub struct LimitState {
    pub t: f64,
    pub m: SpectralField,
}

impl LimitState {
    pub fn new(t: f64, m: SpectralField) -> Self {
        LimitState { t, m }
    }

    pub fn u_field(&self, params: &ModelParams) -> SpectralField {
        let mut u = self.m.clone();
        for c in 0..u.ncomp() {
            u.comp_mut(c)[0] += params.ubar();
        }
        u
    }
}

/// Fixed-step integrating-factor midpoint integrator.
pub struct LimitStepper {
    params: ModelParams,
    grid: Arc<Grid>,
    dt: f64,
    geom: Vec<ModeGeom>,
    half: Vec<f64>,
    full: Vec<f64>,
}

impl LimitStepper {
    pub fn new(params: &ModelParams, grid: &Arc<Grid>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step {dt} must be positive")));
        }
        if grid.dim() != params.dim() {
            return Err(Error::invalid("grid dimension differs from the model"));
        }
        let geom = mode_geometry(grid, params.a());
        let half = geom.iter().map(|g| (-g.sw * 0.5 * dt).exp()).collect();
        let full = geom.iter().map(|g| (-g.sw * dt).exp()).collect();
        Ok(LimitStepper {
            params: params.clone(),
            grid: Arc::clone(grid),
            dt,
            geom,
            half,
            full,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `-Σ_i ∂_i g_i(m)`.
    fn rhs(&self, m: &SpectralField) -> SpectralField {
        let (d, n) = (self.params.dim(), self.params.n());
        let g = self.params.source(m);
        let len = self.grid.len();
        let mut out = SpectralField::zeros(&self.grid, n);
        for c in 0..n {
            let dst = out.comp_mut(c);
            for i in 0..d {
                let src = g.comp(i * n + c);
                for idx in 0..len {
                    dst[idx] -= src[idx] * Complex64::new(0.0, self.geom[idx].xi[i]);
                }
            }
        }
        out
    }

    fn scale_modes(&self, field: &mut SpectralField, factors: &[f64]) {
        let len = self.grid.len();
        for (i, c) in field.data_mut().iter_mut().enumerate() {
            *c *= factors[i % len];
        }
    }

    pub fn step(&self, state: &mut LimitState) -> Result<()> {
        let h = self.dt;
        let n0 = self.rhs(&state.m);
        let mut mid = state.m.clone();
        mid.axpy(0.5 * h, &n0);
        self.scale_modes(&mut mid, &self.half);
        let mut kick = self.rhs(&mid);
        self.scale_modes(&mut kick, &self.half);
        let mut next = state.m.clone();
        self.scale_modes(&mut next, &self.full);
        next.axpy(h, &kick);
        state.m = next;
        state.t += h;
        if !state.m.is_finite() {
            return Err(Error::Numerical {
                t: state.t,
                what: "non-finite limit state".into(),
            });
        }
        Ok(())
    }
}

/// One step of size `dt`.
pub fn limit_step(state: &LimitState, dt: f64, params: &ModelParams) -> Result<LimitState> {
    let stepper = LimitStepper::new(params, state.m.grid(), dt)?;
    let mut out = state.clone();
    stepper.step(&mut out)?;
    Ok(out)
}

/// Advances to `t_target` with equal steps no longer than `dt_max`.
pub fn advance_to(state: &mut LimitState, t_target: f64, dt_max: f64, params: &ModelParams) -> Result<()> {
    let span = t_target - state.t;
    if span < 0.0 {
        return Err(Error::invalid(format!("target time {t_target} lies before {}", state.t)));
    }
    if span == 0.0 {
        return Ok(());
    }
    let count = (span / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let stepper = LimitStepper::new(params, state.m.grid(), span / count as f64)?;
    for _ in 0..count {
        stepper.step(state)?;
    }
    state.t = t_target;
    Ok(())
}

/// `v*_i - v̄ = -a_i ∂_i m* + f_i(ū + m*) - v̄`, `d·n` components axis-major.
pub fn darcy_reconstruct(m_star: &SpectralField, params: &ModelParams) -> SpectralField {
    let (d, n) = (params.dim(), params.n());
    let mut v = params.source(m_star);
    for i in 0..d {
        let dm = m_star.derivative(i);
        for c in 0..n {
            v.comp_mut(i * n + c).iter_mut().zip(dm.comp(c)).for_each(|(o, &g)| *o -= g * params.a()[i]);
        }
    }
    v.dealias_in_place();
    v
}
