//! Rescaled Jin-Xin relaxation system.
//!
//! With `m = u - ū` and `w_i = ε (v_i - v̄)` the system reads
//!
//! ```text
//! ∂_t m   + (1/ε) Σ_i ∂_i w_i                 = 0
//! ∂_t w_i + (1/ε) a_i ∂_i m + w_i / ε²        = (1/ε) g_i(m),   g_i(m) = f_i(ū + m) - v̄
//! ```
//!
//! The linear part is integrated exactly per Fourier mode by [`ModeMap`];
//! the source is evaluated pseudospectrally. Field `w` stores its `d·n`
//! components axis-major: component `c` of `w_i` sits at index `i·n + c`.

use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralField};
use crate::lp::{BesovSpec, DyadicFilter};
use crate::rng;
use crate::symbol::{ModeMap, SymbolParams};

/// Flux `f_i`, each acting componentwise on `u ∈ ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxSpec {
    Zero,
    /// `f_i(u) = v̄ + c_i (u - ū)²`.
    Quadratic { coeffs: Vec<f64> },
    /// `f(u) = u²/2`, d = 1 and ū = 0.
    Burgers1d,
    /// `f_i(u) = v̄ + Σ_k table[i][k] (u - ū)^k`.
    Polynomial { table: Vec<Vec<f64>> },
}

impl FluxSpec {
    pub fn label(&self) -> &'static str {
        match self {
            FluxSpec::Zero => "zero",
            FluxSpec::Quadratic { .. } => "quadratic",
            FluxSpec::Burgers1d => "burgers1d",
            FluxSpec::Polynomial { .. } => "polynomial",
        }
    }
}

/// Model parameters shared by the relaxation and limit solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    symbol: SymbolParams,
    n: usize,
    ubar: f64,
    vbar: f64,
    flux: FluxSpec,
    /// Coefficients of `f_i(ū + m) - v̄` in powers of `m`, per axis.
    poly: Vec<Vec<f64>>,
}

impl ModelParams {
    pub fn new(symbol: SymbolParams, n: usize, ubar: f64, vbar: f64, flux: FluxSpec, theorem_mode: bool) -> Result<Self> {
        let d = symbol.dim();
        if n == 0 {
            return Err(Error::invalid("number of components n must be positive"));
        }
        if !(ubar >= 0.0 && ubar.is_finite()) || !(vbar >= 0.0 && vbar.is_finite()) {
            return Err(Error::invalid(format!("equilibrium (ū, v̄) = ({ubar}, {vbar}) must be non-negative")));
        }
        let poly = match &flux {
            FluxSpec::Zero => vec![vec![-vbar]; d],
            FluxSpec::Quadratic { coeffs } => {
                if coeffs.len() != d {
                    return Err(Error::invalid(format!("quadratic flux needs {d} coefficients, got {}", coeffs.len())));
                }
                coeffs.iter().map(|&c| vec![0.0, 0.0, c]).collect()
            }
            FluxSpec::Burgers1d => {
                if d != 1 {
                    return Err(Error::invalid("burgers1d flux requires d = 1"));
                }
                if ubar != 0.0 {
                    return Err(Error::invalid("burgers1d flux requires ū = 0"));
                }
                vec![vec![-vbar, 0.0, 0.5]]
            }
            FluxSpec::Polynomial { table } => {
                if table.len() != d {
                    return Err(Error::invalid(format!("polynomial flux needs {d} rows, got {}", table.len())));
                }
                table.clone()
            }
        };
        if poly.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("flux coefficients must be finite"));
        }
        let params = ModelParams {
            symbol,
            n,
            ubar,
            vbar,
            flux,
            poly,
        };
        if theorem_mode {
            for i in 0..d {
                let f0 = params.flux_value(i, ubar);
                let df0 = params.flux_jacobian(i, ubar);
                if (f0 - vbar).abs() > 1e-12 {
                    return Err(Error::invalid(format!("f_{}(ū) = {f0} differs from v̄ = {vbar}", i + 1)));
                }
                if df0.abs() > 1e-12 {
                    return Err(Error::invalid(format!("f_{}'(ū) = {df0} must vanish", i + 1)));
                }
            }
        }
        Ok(params)
    }

    pub fn symbol(&self) -> &SymbolParams {
        &self.symbol
    }

    pub fn eps(&self) -> f64 {
        self.symbol.eps()
    }

    pub fn a(&self) -> &[f64] {
        self.symbol.a()
    }

    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ubar(&self) -> f64 {
        self.ubar
    }

    pub fn vbar(&self) -> f64 {
        self.vbar
    }

    pub fn flux(&self) -> &FluxSpec {
        &self.flux
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut out = self.clone();
        out.symbol = self.symbol.with_eps(eps)?;
        Ok(out)
    }

    /// `f_i(ū + m) - v̄`.
    pub fn source_value(&self, axis: usize, m: f64) -> f64 {
        self.poly[axis].iter().rev().fold(0.0, |acc, &c| acc * m + c)
    }

    pub fn flux_value(&self, axis: usize, u: f64) -> f64 {
        self.vbar + self.source_value(axis, u - self.ubar)
    }

    pub fn flux_jacobian(&self, axis: usize, u: f64) -> f64 {
        let m = u - self.ubar;
        let p = &self.poly[axis];
        (1..p.len()).rev().fold(0.0, |acc, k| acc * m + k as f64 * p[k])
    }

    /// True when every `g_i` is affine in `m`.
    pub fn is_affine(&self) -> bool {
        self.poly.iter().all(|p| p.iter().skip(2).all(|&c| c == 0.0))
    }

    /// `g_i(m)` for every axis and component, `d·n` components axis-major.
    pub fn source(&self, m: &SpectralField) -> SpectralField {
        let (d, n) = (self.dim(), self.n);
        let grid = m.grid();
        if self.is_affine() {
            let mut out = SpectralField::zeros(grid, d * n);
            for i in 0..d {
                let c0 = self.poly[i].first().copied().unwrap_or(0.0);
                let c1 = self.poly[i].get(1).copied().unwrap_or(0.0);
                for c in 0..n {
                    let dst = out.comp_mut(i * n + c);
                    for (o, &v) in dst.iter_mut().zip(m.comp(c)) {
                        *o = v * c1;
                    }
                    dst[0] += c0;
                }
            }
            return out;
        }
        m.map_pointwise(d * n, |mv, out| {
            for i in 0..d {
                for c in 0..n {
                    out[i * n + c] = self.source_value(i, mv[c]);
                }
            }
        })
    }
}

/// Time plus perturbation fields of the rescaled system.
#[derive(Clone, Debug)]
pub struct RelaxState {
    pub t: f64,
    pub m: SpectralField,
    pub w: SpectralField,
}

impl RelaxState {
    pub fn new(t: f64, m: SpectralField, w: SpectralField, params: &ModelParams) -> Result<Self> {
        let (d, n) = (params.dim(), params.n());
        if m.ncomp() != n || w.ncomp() != d * n {
            return Err(Error::invalid(format!(
                "state needs {n} + {} components, got {} + {}",
                d * n,
                m.ncomp(),
                w.ncomp()
            )));
        }
        if m.grid().dim() != d {
            return Err(Error::invalid("grid dimension differs from the model"));
        }
        Ok(RelaxState { t, m, w })
    }

    pub fn zero(grid: &Arc<Grid>, params: &ModelParams) -> Self {
        RelaxState {
            t: 0.0,
            m: SpectralField::zeros(grid, params.n()),
            w: SpectralField::zeros(grid, params.dim() * params.n()),
        }
    }

    /// Physical `u = ū + m`.
    pub fn u_field(&self, params: &ModelParams) -> SpectralField {
        let mut u = self.m.clone();
        for c in 0..u.ncomp() {
            u.comp_mut(c)[0] += params.ubar();
        }
        u
    }

    /// Physical `v = v̄ + w/ε`.
    pub fn v_field(&self, params: &ModelParams) -> SpectralField {
        let mut v = self.w.scaled(1.0 / params.eps());
        for c in 0..v.ncomp() {
            v.comp_mut(c)[0] += params.vbar();
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite() && self.w.is_finite()
    }
}

/// `w₀ = ε(-a_i ∂_i m₀ + g_i(m₀))`, so the damped mode vanishes initially.
pub fn well_prepared_init(m0: &SpectralField, params: &ModelParams) -> Result<RelaxState> {
    let (d, n) = (params.dim(), params.n());
    let eps = params.eps();
    let mut w = params.source(m0);
    for i in 0..d {
        let dm = m0.derivative(i);
        for c in 0..n {
            let a = params.a()[i];
            for (o, &g) in w.comp_mut(i * n + c).iter_mut().zip(dm.comp(c)) {
                *o = (*o - g * a) * eps;
            }
        }
    }
    RelaxState::new(0.0, m0.clone(), w, params)
}

/// Mean-free random real field with spectrum in the annulus `2^{j_lo} <= |ξ| <= 2^{j_hi}`
/// (and inside the dealiased box), scaled to `‖·‖_{Ḃ^{d/2-1}_{2,1} ∩ Ḃ^{d/2}_{2,1}} = η`.
pub fn random_perturbation(seed: u64, stream: u64, eta: f64, band: (i32, i32), grid: &Arc<Grid>, ncomp: usize) -> Result<SpectralField> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("target norm η = {eta} must be non-negative")));
    }
    let (lo, hi) = (2f64.powi(band.0), 2f64.powi(band.1));
    let len = grid.len();
    let dim = grid.dim();
    let nyq = (grid.points() / 2) as i64;
    let cut = grid.points() as f64 / 3.0;
    let in_band = |idx: usize| {
        let r = grid.xi_norm(idx);
        let k = grid.wavenumber(idx);
        let k = &k[..dim];
        r >= lo && r <= hi && k.iter().all(|&ka| ka != nyq && (ka.abs() as f64) <= cut)
    };
    if band.0 > band.1 || !(1..len).any(in_band) {
        return Err(Error::invalid(format!("band [2^{}, 2^{}] holds no resolved mode", band.0, band.1)));
    }
    let mut rng = rng::stream(seed, stream);
    let mut raw = vec![Complex64::new(0.0, 0.0); ncomp * len];
    for c in 0..ncomp {
        for idx in 1..len {
            if in_band(idx) {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                raw[c * len + idx] = Complex64::new(re, im);
            }
        }
    }
    let mut data = raw.clone();
    for c in 0..ncomp {
        for idx in 1..len {
            let k = grid.wavenumber(idx);
            if k.iter().any(|&ka| ka == nyq) {
                data[c * len + idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let neg = grid.mode_index([-k[0], -k[1], -k[2]])?;
            data[c * len + idx] = 0.5 * (raw[c * len + idx] + raw[c * len + neg].conj());
        }
    }
    let field = SpectralField::from_coefficients(grid, ncomp, data)?;
    if eta == 0.0 {
        return Ok(SpectralField::zeros(grid, ncomp));
    }
    let filter = DyadicFilter::covering(grid)?;
    let s = dim as f64 / 2.0;
    let norm = filter.intersection_norm(&field, &[BesovSpec::b21(s - 1.0), BesovSpec::b21(s)]);
    Ok(field.scaled(eta / norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Source kicks around the exact linear propagator.
    StrangAp,
    /// Exponential midpoint: exact linear part, midpoint Duhamel source.
    Etd,
    /// Exact relaxation with source around an undamped transport rotation.
    StrangRh,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::StrangAp => "strang_ap",
            Scheme::Etd => "etd",
            Scheme::StrangRh => "strang_rh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "strang_ap" => Ok(Scheme::StrangAp),
            "etd" => Ok(Scheme::Etd),
            "strang_rh" => Ok(Scheme::StrangRh),
            other => Err(Error::invalid(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Per-mode wavevector data with Nyquist components dropped.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ModeGeom {
    pub xi: [f64; 3],
    pub q: [f64; 3],
    pub sw: f64,
}

pub(crate) fn mode_geometry(grid: &Grid, a: &[f64]) -> Vec<ModeGeom> {
    let d = grid.dim();
    let nyq = (grid.points() / 2) as i64;
    (0..grid.len())
        .map(|idx| {
            let k = grid.wavenumber(idx);
            let mut xi = grid.wavevector(idx);
            for axis in 0..3 {
                if axis >= d || k[axis] == nyq {
                    xi[axis] = 0.0;
                }
            }
            let mut q = [0.0; 3];
            for axis in 0..d {
                q[axis] = a[axis] * xi[axis];
            }
            let sw = (0..d).map(|axis| q[axis] * xi[axis]).sum();
            ModeGeom { xi, q, sw }
        })
        .collect()
}

/// Fixed-step integrator for one `(model, grid, scheme, Δt)`.
pub struct Stepper {
    params: ModelParams,
    grid: Arc<Grid>,
    scheme: Scheme,
    dt: f64,
    geom: Vec<ModeGeom>,
    tables: Vec<Vec<ModeMap>>,
}

impl Stepper {
    pub fn new(params: &ModelParams, grid: &Arc<Grid>, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step {dt} must be positive")));
        }
        if grid.dim() != params.dim() {
            return Err(Error::invalid("grid dimension differs from the model"));
        }
        let eps = params.eps();
        let geom = mode_geometry(grid, params.a());
        let build = |f: &dyn Fn(f64) -> ModeMap| geom.iter().map(|g| f(g.sw)).collect::<Vec<_>>();
        let tables = match scheme {
            Scheme::Etd => vec![
                build(&|sw| ModeMap::exp(sw, eps, 0.5 * dt)),
                build(&|sw| ModeMap::exp(sw, eps, dt)),
                build(&|sw| ModeMap::integral(sw, eps, 0.5 * dt)),
                build(&|sw| ModeMap::integral(sw, eps, dt)),
            ],
            Scheme::StrangAp => vec![build(&|sw| ModeMap::exp(sw, eps, dt))],
            Scheme::StrangRh => vec![build(&|sw| ModeMap::transport(sw, eps, dt))],
        };
        Ok(Stepper {
            params: params.clone(),
            grid: Arc::clone(grid),
            scheme,
            dt,
            geom,
            tables,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Applies table `k` in place to `(m, w)`.
    fn apply(&self, k: usize, m: &mut SpectralField, w: &mut SpectralField) {
        let (d, n) = (self.params.dim(), self.params.n());
        let len = self.grid.len();
        let table = &self.tables[k];
        let mut wv = [Complex64::new(0.0, 0.0); 3];
        for c in 0..n {
            for idx in 0..len {
                let g = &self.geom[idx];
                for i in 0..d {
                    wv[i] = w.comp(i * n + c)[idx];
                }
                let mv = m.comp(c)[idx];
                let out = table[idx].apply(&g.xi[..d], &g.q[..d], g.sw, mv, &mut wv[..d]);
                m.comp_mut(c)[idx] = out;
                for i in 0..d {
                    w.comp_mut(i * n + c)[idx] = wv[i];
                }
            }
        }
    }

    /// `(m, w) ← E (m, w) + Φ (0, g(m_src)/ε)` with tables `e` and `phi`.
    fn duhamel(&self, e: usize, phi: usize, m: &mut SpectralField, w: &mut SpectralField, m_src: &SpectralField) {
        self.apply(e, m, w);
        if self.params.is_affine() && self.params.poly.iter().all(|p| p.iter().all(|&c| c == 0.0)) {
            return;
        }
        let mut dm = SpectralField::zeros(&self.grid, self.params.n());
        let mut dw = self.params.source(m_src).scaled(1.0 / self.params.eps());
        self.apply(phi, &mut dm, &mut dw);
        m.axpy(1.0, &dm);
        w.axpy(1.0, &dw);
    }

    fn kick(&self, tau: f64, state: &mut RelaxState) {
        let g = self.params.source(&state.m);
        state.w.axpy(tau / self.params.eps(), &g);
    }

    /// Exact `∂_t w = -w/ε² + g(m)/ε` with `m` frozen.
    fn relax(&self, tau: f64, state: &mut RelaxState) {
        let eps = self.params.eps();
        let decay = (-tau / (eps * eps)).exp();
        let gain = -(-tau / (eps * eps)).exp_m1() * eps;
        let g = self.params.source(&state.m);
        let mut w = state.w.scaled(decay);
        w.axpy(gain, &g);
        state.w = w;
    }

    pub fn step(&self, state: &mut RelaxState) -> Result<()> {
        let dt = self.dt;
        match self.scheme {
            Scheme::Etd => {
                let (m0, w0) = (state.m.clone(), state.w.clone());
                let (mut mh, mut wh) = (m0.clone(), w0.clone());
                self.duhamel(0, 2, &mut mh, &mut wh, &m0);
                let (mut m1, mut w1) = (m0, w0);
                self.duhamel(1, 3, &mut m1, &mut w1, &mh);
                state.m = m1;
                state.w = w1;
            }
            Scheme::StrangAp => {
                self.kick(0.5 * dt, state);
                self.apply(0, &mut state.m, &mut state.w);
                self.kick(0.5 * dt, state);
            }
            Scheme::StrangRh => {
                self.relax(0.5 * dt, state);
                self.apply(0, &mut state.m, &mut state.w);
                self.relax(0.5 * dt, state);
            }
        }
        state.t += dt;
        if !state.is_finite() {
            return Err(Error::Numerical {
                t: state.t,
                what: format!("non-finite relaxation state ({} scheme)", self.scheme.label()),
            });
        }
        Ok(())
    }
}

/// One step of size `dt`.
pub fn step(state: &RelaxState, dt: f64, scheme: Scheme, params: &ModelParams) -> Result<RelaxState> {
    let stepper = Stepper::new(params, state.m.grid(), scheme, dt)?;
    let mut out = state.clone();
    stepper.step(&mut out)?;
    Ok(out)
}

/// Advances to `t_target` with equal steps no longer than `dt_max`.
pub fn advance_to(state: &mut RelaxState, t_target: f64, dt_max: f64, scheme: Scheme, params: &ModelParams) -> Result<()> {
    let span = t_target - state.t;
    if span < 0.0 {
        return Err(Error::invalid(format!("target time {t_target} lies before {}", state.t)));
    }
    if span == 0.0 {
        return Ok(());
    }
    let count = (span / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let stepper = Stepper::new(params, state.m.grid(), scheme, span / count as f64)?;
    for _ in 0..count {
        stepper.step(state)?;
    }
    state.t = t_target;
    Ok(())
}

/// Runs `steps` fixed steps, calling `observe` on the initial state and after
/// every `stride`-th step.
pub fn simulate(
    state: &mut RelaxState,
    stepper: &Stepper,
    steps: usize,
    stride: usize,
    mut observe: impl FnMut(&RelaxState) -> Result<()>,
) -> Result<()> {
    if stride == 0 {
        return Err(Error::invalid("snapshot stride must be positive"));
    }
    let t0 = state.t;
    observe(state)?;
    for k in 1..=steps {
        stepper.step(state)?;
        state.t = t0 + k as f64 * stepper.dt();
        if k % stride == 0 {
            observe(state)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::propagator;

    fn params_1d(eps: f64, flux: FluxSpec) -> ModelParams {
        ModelParams::new(SymbolParams::new(eps, vec![1.0]).unwrap(), 1, 0.0, 0.0, flux, true).unwrap()
    }

    #[test]
    fn flux_validation() {
        let s2 = SymbolParams::new(0.1, vec![1.0, 2.0]).unwrap();
        assert!(ModelParams::new(s2.clone(), 1, 0.0, 0.0, FluxSpec::Burgers1d, false).is_err());
        assert!(ModelParams::new(s2.clone(), 1, 0.0, 0.0, FluxSpec::Quadratic { coeffs: vec![1.0] }, false).is_err());
        assert!(ModelParams::new(s2.clone(), 1, 1.0, 0.5, FluxSpec::Quadratic { coeffs: vec![1.0, 2.0] }, true).is_ok());
        let lin = FluxSpec::Polynomial {
            table: vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]],
        };
        assert!(ModelParams::new(s2.clone(), 1, 0.0, 0.0, lin.clone(), true).is_err());
        assert!(ModelParams::new(s2.clone(), 1, 0.0, 0.0, lin, false).is_ok());
        assert!(ModelParams::new(s2, 1, 0.0, 1.0, FluxSpec::Zero, true).is_err());
        let s1 = SymbolParams::new(0.1, vec![1.0]).unwrap();
        assert!(ModelParams::new(s1, 1, 0.5, 0.0, FluxSpec::Burgers1d, false).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let s = SymbolParams::new(0.1, vec![1.0, 2.0]).unwrap();
        let p = ModelParams::new(
            s,
            1,
            0.3,
            0.2,
            FluxSpec::Polynomial {
                table: vec![vec![0.0, 0.0, 1.5, -0.7], vec![0.0, 0.0, 0.0, 0.0, 2.0]],
            },
            true,
        )
        .unwrap();
        for &u in &[-1.3, 0.0, 0.3, 0.77, 2.1] {
            for axis in 0..2 {
                let h = 1e-6;
                let fd = (p.flux_value(axis, u + h) - p.flux_value(axis, u - h)) / (2.0 * h);
                assert!((fd - p.flux_jacobian(axis, u)).abs() < 1e-6);
            }
        }
        assert!((p.flux_value(0, 0.3) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn well_prepared_examples() {
        let grid = Grid::new(1, 1, 32, 1.0).unwrap();
        let p = params_1d(0.1, FluxSpec::Zero);
        let m0 = SpectralField::from_fn(&grid, 1, |_, x| x[0].sin());
        let st = well_prepared_init(&m0, &p).unwrap();
        let v = st.v_field(&p).to_physical();
        for idx in 0..grid.len() {
            let x = grid.coordinate(idx)[0];
            assert!((v[idx] + x.cos()).abs() < 1e-12);
        }
        let zero = SpectralField::zeros(&grid, 1);
        let st = well_prepared_init(&zero, &p).unwrap();
        assert_eq!(st.w.max_abs_coefficient(), 0.0);
    }

    #[test]
    fn random_perturbation_properties() {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let a = random_perturbation(11, 1, 0.01, (1, 3), &grid, 1).unwrap();
        let b = random_perturbation(11, 1, 0.01, (1, 3), &grid, 1).unwrap();
        assert_eq!(a.data(), b.data());
        assert!(a.conjugate_symmetry_defect() < 1e-15);
        assert_eq!(a.mean(0), 0.0);
        let filter = DyadicFilter::covering(&grid).unwrap();
        let norm = filter.intersection_norm(&a, &[BesovSpec::b21(0.0), BesovSpec::b21(1.0)]);
        assert!((norm - 0.01).abs() < 1e-12);
        let z = random_perturbation(11, 1, 0.0, (1, 3), &grid, 1).unwrap();
        assert_eq!(z.max_abs_coefficient(), 0.0);
        assert!(random_perturbation(11, 1, 0.01, (8, 9), &grid, 1).is_err());
        for idx in 0..grid.len() {
            if a.comp(0)[idx].norm() > 0.0 {
                let r = grid.xi_norm(idx);
                assert!((2.0..=8.0).contains(&r));
            }
        }
    }

    #[test]
    fn etd_linear_step_is_exact() {
        let grid = Grid::new(2, 1, 16, 1.0).unwrap();
        let s = SymbolParams::new(0.2, vec![0.8, 1.7]).unwrap();
        let p = ModelParams::new(s.clone(), 1, 0.0, 0.0, FluxSpec::Zero, true).unwrap();
        let m = random_perturbation(3, 1, 1.0, (0, 2), &grid, 1).unwrap();
        let w = random_perturbation(3, 2, 1.0, (0, 2), &grid, 2).unwrap();
        let st = RelaxState::new(0.0, m, w, &p).unwrap();
        let dt = 0.37;
        let out = step(&st, dt, Scheme::Etd, &p).unwrap();
        for idx in 0..grid.len() {
            let xi = grid.wavevector(idx);
            let prop = propagator(&xi[..2], &s, dt);
            let u = [st.m.comp(0)[idx], st.w.comp(0)[idx], st.w.comp(1)[idx]];
            let got = [out.m.comp(0)[idx], out.w.comp(0)[idx], out.w.comp(1)[idx]];
            for r in 0..3 {
                let expect: Complex64 = (0..3).map(|c| prop[(r, c)] * u[c]).sum();
                assert!((expect - got[r]).norm() < 1e-12, "mode {idx} row {r}");
            }
        }
    }

    fn quadratic_state(eps: f64, scheme_seed: u64) -> (ModelParams, RelaxState) {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let s = SymbolParams::new(eps, vec![1.0, 1.5]).unwrap();
        let p = ModelParams::new(s, 1, 0.0, 0.0, FluxSpec::Quadratic { coeffs: vec![1.0, -0.5] }, true).unwrap();
        let mut m = random_perturbation(scheme_seed, 1, 0.5, (0, 2), &grid, 1).unwrap();
        for c in m.comp_mut(0).iter_mut().take(1) {
            *c = Complex64::new(0.3, 0.0);
        }
        let st = well_prepared_init(&m, &p).unwrap();
        (p, st)
    }

    #[test]
    fn mass_conserved_by_all_schemes() {
        for scheme in [Scheme::StrangAp, Scheme::Etd, Scheme::StrangRh] {
            let (p, mut st) = quadratic_state(0.1, 5);
            let mean0 = st.m.mean(0);
            let stepper = Stepper::new(&p, st.m.grid(), scheme, 1e-2).unwrap();
            for _ in 0..100 {
                stepper.step(&mut st).unwrap();
            }
            assert!((st.m.mean(0) - mean0).abs() < 1e-13, "{scheme:?}");
            assert!(st.m.conjugate_symmetry_defect() < 1e-12);
        }
    }

    fn self_convergence(scheme: Scheme, eps: f64) -> (f64, f64) {
        let t_end = 0.2;
        let run = |dt: f64| {
            let (p, mut st) = quadratic_state(eps, 9);
            advance_to(&mut st, t_end, dt, scheme, &p).unwrap();
            st
        };
        let reference = run(t_end / 1024.0);
        let errs: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|k| {
                let st = run(t_end / k);
                st.m.sub(&reference.m).l2_norm()
            })
            .collect();
        (errs[0] / errs[1], errs[1] / errs[2])
    }

    #[test]
    fn etd_and_strang_are_second_order_at_fixed_eps() {
        for scheme in [Scheme::Etd, Scheme::StrangAp] {
            let (r1, r2) = self_convergence(scheme, 0.25);
            assert!(r1 > 3.5 && r2 > 3.5, "{scheme:?}: ratios {r1} {r2}");
        }
    }

    #[test]
    fn relaxation_substep_reaches_equilibrium() {
        let (p, st) = quadratic_state(1e-3, 2);
        let stepper = Stepper::new(&p, st.m.grid(), Scheme::StrangRh, 0.1).unwrap();
        let mut s = st.clone();
        stepper.relax(0.05, &mut s);
        let target = p.source(&s.m).scaled(p.eps());
        assert!(s.w.sub(&target).l2_norm() < 1e-12);
    }

    #[test]
    fn non_finite_state_is_reported() {
        let (p, mut st) = quadratic_state(0.1, 1);
        st.m.comp_mut(0)[1] = Complex64::new(f64::NAN, 0.0);
        let stepper = Stepper::new(&p, st.m.grid(), Scheme::Etd, 0.01).unwrap();
        match stepper.step(&mut st) {
            Err(Error::Numerical { t, .. }) => assert!((t - 0.01).abs() < 1e-15),
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }
}
