//! Damped modes, high-frequency Lyapunov functionals, convergence-rate norms
//! and log-log rate fits.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::jinxin::{mode_geometry, ModelParams, RelaxState};
use crate::lp::{BesovSpec, DyadicFilter, Range, SumExp, TimeBlockHistory, TimeExp};

/// `z_i = a_i ∂_i m + w_i/ε + f_i(ū) - f_i(ū + m)`, `d·n` components axis-major.
pub fn effective_mode(state: &RelaxState, params: &ModelParams) -> SpectralField {
    let (d, n) = (params.dim(), params.n());
    let eps = params.eps();
    let shift: Vec<f64> = (0..d).map(|i| params.source_value(i, 0.0)).collect();
    let mut z = state.m.map_pointwise(d * n, |mv, out| {
        for i in 0..d {
            for c in 0..n {
                out[i * n + c] = shift[i] - params.source_value(i, mv[c]);
            }
        }
    });
    for i in 0..d {
        let dm = state.m.derivative(i);
        for c in 0..n {
            let k = i * n + c;
            let w = state.w.comp(k);
            z.comp_mut(k)
                .iter_mut()
                .zip(dm.comp(c).iter().zip(w))
                .for_each(|(o, (&g, &wv))| *o += g * params.a()[i] + wv / eps);
        }
    }
    z
}

/// `Z_i = a_i ∂_i u + v_i - f_i(u)` from the physical fields.
pub fn effective_mode_unscaled(u: &SpectralField, v: &SpectralField, params: &ModelParams) -> SpectralField {
    let (d, n) = (params.dim(), params.n());
    let mut z = u.map_pointwise(d * n, |uv, out| {
        for i in 0..d {
            for c in 0..n {
                out[i * n + c] = -params.flux_value(i, uv[c]);
            }
        }
    });
    for i in 0..d {
        let du = u.derivative(i);
        for c in 0..n {
            let k = i * n + c;
            z.comp_mut(k)
                .iter_mut()
                .zip(du.comp(c).iter().zip(v.comp(k)))
                .for_each(|(o, (&g, &vv))| *o += g * params.a()[i] + vv);
        }
    }
    z
}

/// Block Lyapunov functional and its dissipation rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub j: i32,
    pub l2: f64,
    pub h2: f64,
    /// `H²/ε²`, the weight carried by the dissipation in the differential inequality.
    pub h2_scaled: f64,
    pub eta: f64,
    /// `‖Δ_j (m, w)‖²`.
    pub energy: f64,
}

/// `𝓛_j²` and `𝓗_j²` of a state; the divergence term is `Σ_k ∂_k Δ_j w_k`.
pub fn lyapunov(state: &RelaxState, j: i32, eta: f64, filter: &DyadicFilter, params: &ModelParams) -> Result<LyapunovSample> {
    if j < filter.j_min() || j > filter.j_max() {
        return Err(Error::invalid(format!("block {j} outside {}..={}", filter.j_min(), filter.j_max())));
    }
    let grid = filter.grid();
    let (d, n) = (params.dim(), params.n());
    let eps = params.eps();
    let a = params.a();
    let geom = mode_geometry(grid, a);
    let (mut em, mut ew, mut cross, mut dm, mut dw, mut raw) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for idx in 1..grid.len() {
        let phi = filter.multiplier(j, idx);
        if phi == 0.0 {
            continue;
        }
        let xi = &geom[idx].xi;
        for c in 0..n {
            let m = state.m.comp(c)[idx] * phi;
            let w: Vec<Complex64> = (0..d).map(|i| state.w.comp(i * n + c)[idx] * phi).collect();
            let div: Complex64 = (0..d).map(|k| w[k] * xi[k]).sum();
            em += m.norm_sqr();
            raw += m.norm_sqr();
            for i in 0..d {
                raw += w[i].norm_sqr();
                ew += w[i].norm_sqr() / a[i];
                cross += (w[i].conj() * Complex64::new(0.0, xi[i]) * m).re / a[i];
                dm += xi[i] * xi[i] * m.norm_sqr();
                dw += xi[i] * (w[i].conj() * div).re / a[i];
            }
        }
    }
    let vol = grid.volume();
    let kappa = 2f64.powi(-2 * j) * eta;
    let l2 = vol * (0.5 * em + 0.5 * ew + kappa / eps * cross);
    let h2 = vol * (ew / (eps * eps) + kappa / (eps * eps) * (dm - dw + cross / eps));
    Ok(LyapunovSample {
        j,
        l2,
        h2,
        h2_scaled: h2 / (eps * eps),
        eta,
        energy: vol * raw,
    })
}

/// Extreme ratios `𝓛_j² / ‖Δ_j(m, w)‖²` over all states supported in blocks
/// `j >= j_from`: the smallest and largest eigenvalues of the per-mode form.
pub fn lyapunov_equivalence(params: &ModelParams, filter: &DyadicFilter, j_from: i32, eta: f64) -> (f64, f64) {
    let grid = filter.grid();
    let d = params.dim();
    let a = params.a();
    let geom = mode_geometry(grid, a);
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for j in j_from.max(filter.j_min())..=filter.j_max() {
        let kappa = 2f64.powi(-2 * j) * eta / params.eps();
        for idx in 1..grid.len() {
            if filter.multiplier(j, idx) == 0.0 {
                continue;
            }
            let xi = &geom[idx].xi;
            let mut q = DMatrix::from_element(d + 1, d + 1, Complex64::new(0.0, 0.0));
            q[(0, 0)] = Complex64::new(0.5, 0.0);
            for i in 0..d {
                q[(i + 1, i + 1)] = Complex64::new(0.5 / a[i], 0.0);
                let off = Complex64::new(0.0, 0.5 * kappa * xi[i] / a[i]);
                q[(i + 1, 0)] = off;
                q[(0, i + 1)] = off.conj();
            }
            let eig = q.symmetric_eigenvalues();
            c1 = c1.min(eig.min());
            c2 = c2.max(eig.max());
        }
    }
    (c1, c2)
}

/// Largest η (searched below `eta_max`) keeping `c₂/c₁ <= ratio` on blocks `j >= j_from`.
pub fn calibrate_eta(params: &ModelParams, filter: &DyadicFilter, j_from: i32, ratio: f64, eta_max: f64) -> f64 {
    let ok = |eta: f64| {
        let (c1, c2) = lyapunov_equivalence(params, filter, j_from, eta);
        c1 > 0.0 && c2 / c1 <= ratio
    };
    if ok(eta_max) {
        return eta_max;
    }
    let (mut lo, mut hi) = (0.0, eta_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Which difference a norm is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    U,
    V,
    Z,
}

/// A time-space norm `L^ρ_t(X)` (or `L̃^ρ_t(X)`), `X` an intersection of Besov spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormDef {
    pub name: String,
    pub target: Target,
    pub rho: TimeExp,
    pub tilde: bool,
    pub specs: Vec<BesovSpec>,
}

impl NormDef {
    pub fn new(name: &str, target: Target, rho: TimeExp, tilde: bool, specs: Vec<BesovSpec>) -> Self {
        NormDef {
            name: name.to_string(),
            target,
            rho,
            tilde,
            specs,
        }
    }

    pub fn eval(&self, history: &TimeBlockHistory) -> Result<f64> {
        if self.tilde {
            self.specs.iter().map(|s| history.chemin_lerner(self.rho, s)).sum()
        } else {
            history.lebesgue(self.rho, &self.specs)
        }
    }
}

/// Convergence-rate norms for dimension `d`, with interpolated `σ` norms.
///
/// For `d >= 2`: `u` in `L^∞_t(Ḃ^{d/2-2} ∩ Ḃ^{d/2-1})`, `L¹_t(Ḃ^{d/2})`, `L̃²_t(Ḃ^{d/2})`,
/// `v` in `L¹_t(Ḃ^{d/2-1})`, all with `r = 1`; plus `u` in `L^∞_t(Ḃ^{d/2-σ})` and
/// `v` in `L¹_t(Ḃ^{d/2-σ})`.
/// For `d = 1` the `r = ∞` family: `u` in `L̃^∞_t(Ḃ^{-3/2}_{2,∞} ∩ Ḃ^{-1/2}_{2,∞})`,
/// `L̃¹_t(Ḃ^{1/2}_{2,∞})`, `L̃²_t(Ḃ^{1/2}_{2,∞})`, `v` in `L̃¹_t(Ḃ^{-1/2}_{2,∞})`,
/// and `u` in `L^∞_t(Ḃ^{-1/2}_{2,∞})`, over all blocks and over `j <= J_ε`.
/// The damped mode is measured in `L¹_t(Ḃ^{d/2-1})`, over all blocks and over `j <= J_ε`.
pub fn theorem_norms(d: usize, sigmas: &[f64], j_eps: i32) -> Vec<NormDef> {
    let h = d as f64 / 2.0;
    let b1 = |s: f64| BesovSpec::b21(s);
    let binf = |s: f64| BesovSpec::new(s, SumExp::Inf, Range::All);
    let mut out = if d >= 2 {
        vec![
            NormDef::new("u_linf", Target::U, TimeExp::Inf, false, vec![b1(h - 2.0), b1(h - 1.0)]),
            NormDef::new("u_l1", Target::U, TimeExp::One, false, vec![b1(h)]),
            NormDef::new("u_l2_tilde", Target::U, TimeExp::Two, true, vec![b1(h)]),
            NormDef::new("v_l1", Target::V, TimeExp::One, false, vec![b1(h - 1.0)]),
        ]
    } else {
        vec![
            NormDef::new("u_linf", Target::U, TimeExp::Inf, true, vec![binf(-1.5), binf(-0.5)]),
            NormDef::new("u_l1", Target::U, TimeExp::One, true, vec![binf(0.5)]),
            NormDef::new("u_l2_tilde", Target::U, TimeExp::Two, true, vec![binf(0.5)]),
            NormDef::new("v_l1", Target::V, TimeExp::One, true, vec![binf(-0.5)]),
            NormDef::new("u_linf_bm12", Target::U, TimeExp::Inf, false, vec![binf(-0.5)]),
            NormDef::new(
                "u_linf_bm12_low",
                Target::U,
                TimeExp::Inf,
                false,
                vec![BesovSpec::new(-0.5, SumExp::Inf, Range::Low(j_eps))],
            ),
        ]
    };
    for &s in sigmas {
        out.push(NormDef::new(&format!("u_linf_sigma{s}"), Target::U, TimeExp::Inf, false, vec![b1(h - s)]));
        out.push(NormDef::new(&format!("v_l1_sigma{s}"), Target::V, TimeExp::One, false, vec![b1(h - s)]));
    }
    out.push(NormDef::new("z_l1", Target::Z, TimeExp::One, false, vec![b1(h - 1.0)]));
    out.push(NormDef::new(
        "z_l1_low",
        Target::Z,
        TimeExp::One,
        false,
        vec![BesovSpec::new(h - 1.0, SumExp::One, Range::Low(j_eps))],
    ));
    out
}

/// Block histories of `u - u*`, `v - v*` and `z` on a shared schedule.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ErrorHistories {
    pub u: TimeBlockHistory,
    pub v: TimeBlockHistory,
    pub z: TimeBlockHistory,
}

impl ErrorHistories {
    pub fn new(j_min: i32) -> Self {
        ErrorHistories {
            u: TimeBlockHistory::new(j_min),
            v: TimeBlockHistory::new(j_min),
            z: TimeBlockHistory::new(j_min),
        }
    }

    /// Records one snapshot of the relaxation state against the limit perturbation `m*`.
    pub fn record(&mut self, filter: &DyadicFilter, state: &RelaxState, m_star: &SpectralField, params: &ModelParams) -> Result<()> {
        let du = state.m.sub(m_star);
        let v = state.w.scaled(1.0 / params.eps());
        let dv = v.sub(&crate::limit::darcy_reconstruct(m_star, params));
        let z = effective_mode(state, params);
        self.u.record(state.t, filter, &du)?;
        self.v.record(state.t, filter, &dv)?;
        self.z.record(state.t, filter, &z)
    }
}

/// Evaluates every norm on the matching history.
pub fn error_norms(hist: &ErrorHistories, norms: &[NormDef]) -> Result<BTreeMap<String, f64>> {
    if hist.u.times() != hist.v.times() || hist.u.times() != hist.z.times() {
        return Err(Error::invalid("error histories use different schedules"));
    }
    norms
        .iter()
        .map(|nd| {
            let h = match nd.target {
                Target::U => &hist.u,
                Target::V => &hist.v,
                Target::Z => &hist.z,
            };
            Ok((nd.name.clone(), nd.eval(h)?))
        })
        .collect()
}

/// Least-squares line through `(log ε, log error)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn rate_fit(eps: &[f64], errors: &[f64]) -> Result<RateFit> {
    if eps.len() != errors.len() {
        return Err(Error::invalid("ε and error lists differ in length"));
    }
    if eps.len() < 3 {
        return Err(Error::invalid(format!("rate fit needs at least 3 points, got {}", eps.len())));
    }
    if let Some(bad) = eps.iter().chain(errors).find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(format!("rate fit needs positive finite values, got {bad}")));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs distinct ε values"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Per-ε norm table with one fit per norm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub eps: Vec<f64>,
    /// Norm name → value per ε (`None` for failed runs).
    pub errors: BTreeMap<String, Vec<Option<f64>>>,
    pub fits: BTreeMap<String, RateFit>,
    /// Norms whose fit was rejected, with the reason.
    pub rejected: BTreeMap<String, String>,
    /// Failed ε values with their error message.
    pub failures: Vec<(f64, String)>,
}

impl RateReport {
    /// Assembles the table and fits each norm over the successful runs.
    pub fn assemble(eps: &[f64], runs: &[std::result::Result<BTreeMap<String, f64>, String>]) -> Self {
        let mut report = RateReport {
            eps: eps.to_vec(),
            ..Default::default()
        };
        for (e, run) in eps.iter().zip(runs) {
            match run {
                Ok(values) => {
                    for name in values.keys() {
                        report.errors.entry(name.clone()).or_insert_with(|| vec![None; eps.len()]);
                    }
                }
                Err(msg) => report.failures.push((*e, msg.clone())),
            }
        }
        for (k, run) in runs.iter().enumerate() {
            if let Ok(values) = run {
                for (name, &v) in values {
                    report.errors.get_mut(name).expect("inserted above")[k] = Some(v);
                }
            }
        }
        for (name, column) in &report.errors {
            let (xs, ys): (Vec<f64>, Vec<f64>) = eps
                .iter()
                .zip(column)
                .filter_map(|(&e, v)| v.map(|v| (e, v)))
                .unzip();
            match rate_fit(&xs, &ys) {
                Ok(fit) => {
                    report.fits.insert(name.clone(), fit);
                }
                Err(err) => {
                    report.rejected.insert(name.clone(), err.to_string());
                }
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::jinxin::{random_perturbation, well_prepared_init, FluxSpec, Scheme, Stepper};
    use crate::lp::phi;
    use crate::symbol::SymbolParams;

    fn quad2d(eps: f64) -> ModelParams {
        ModelParams::new(
            SymbolParams::new(eps, vec![1.0, 2.0]).unwrap(),
            1,
            0.5,
            0.25,
            FluxSpec::Quadratic { coeffs: vec![1.0, -0.5] },
            true,
        )
        .unwrap()
    }

    #[test]
    fn effective_mode_vanishes_on_prepared_and_zero_states() {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let p = quad2d(0.05);
        let m = random_perturbation(1, 1, 0.3, (0, 2), &grid, 1).unwrap();
        let st = well_prepared_init(&m, &p).unwrap();
        assert!(effective_mode(&st, &p).max_abs_coefficient() < 1e-12);
        let zero = RelaxState::zero(&grid, &p);
        assert_eq!(effective_mode(&zero, &p).max_abs_coefficient(), 0.0);
    }

    #[test]
    fn effective_mode_scaled_and_unscaled_agree() {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let p = quad2d(0.1);
        let m = random_perturbation(2, 1, 0.4, (0, 2), &grid, 1).unwrap();
        let w = random_perturbation(2, 2, 0.4, (0, 2), &grid, 2).unwrap();
        let st = RelaxState::new(0.0, m, w, &p).unwrap();
        let z = effective_mode(&st, &p);
        let zz = effective_mode_unscaled(&st.u_field(&p), &st.v_field(&p), &p);
        assert!(z.sub(&zz).max_abs_coefficient() < 1e-12);
    }

    fn high_state(p: &ModelParams, grid: &std::sync::Arc<Grid>, seed: u64) -> RelaxState {
        let m = random_perturbation(seed, 1, 1.0, (3, 4), grid, 1).unwrap();
        let w = random_perturbation(seed, 2, 1.0, (3, 4), grid, p.dim()).unwrap();
        RelaxState::new(0.0, m, w, p).unwrap()
    }

    #[test]
    fn lyapunov_without_mixing_is_block_energy() {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let p = quad2d(0.1);
        let filter = DyadicFilter::covering(&grid).unwrap();
        let st = high_state(&p, &grid, 4);
        let s = lyapunov(&st, 3, 0.0, &filter, &p).unwrap();
        let em = filter.block(&st.m, 3).unwrap().l2_norm().powi(2);
        let bw = filter.block(&st.w, 3).unwrap();
        let ew = bw.components(0..1).l2_norm().powi(2) + bw.components(1..2).l2_norm().powi(2) / 2.0;
        assert!((s.l2 - 0.5 * (em + ew)).abs() < 1e-12 * s.l2);
    }

    #[test]
    fn lyapunov_dissipation_identity_for_linear_flow() {
        // d L²/dt = -H² along exact linear trajectories, checked by central differences
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let p = ModelParams::new(SymbolParams::new(0.125, vec![1.0, 2.0]).unwrap(), 1, 0.0, 0.0, FluxSpec::Zero, true).unwrap();
        let filter = DyadicFilter::covering(&grid).unwrap();
        let st = high_state(&p, &grid, 5);
        let h = 1e-6;
        let stepper = Stepper::new(&p, &grid, Scheme::Etd, h).unwrap();
        let mut plus = st.clone();
        stepper.step(&mut plus).unwrap();
        let mut twice = plus.clone();
        stepper.step(&mut twice).unwrap();
        for j in 2..=4 {
            let l_plus = lyapunov(&plus, j, 0.3, &filter, &p).unwrap().l2;
            let l_two = lyapunov(&twice, j, 0.3, &filter, &p).unwrap().l2;
            let l0 = lyapunov(&st, j, 0.3, &filter, &p).unwrap();
            // second-order one-sided difference
            let deriv = (-3.0 * l0.l2 + 4.0 * l_plus - l_two) / (2.0 * h);
            assert!((deriv + l0.h2).abs() < 1e-6 * l0.h2.abs().max(1.0), "j {j}: {deriv} vs {}", -l0.h2);
        }
    }

    #[test]
    fn equivalence_bounds_match_random_states() {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let p = quad2d(0.0625);
        let filter = DyadicFilter::covering(&grid).unwrap();
        let j_eps = crate::lp::threshold(0.0625, 1).unwrap();
        let eta = 0.05;
        let (c1, c2) = lyapunov_equivalence(&p, &filter, j_eps - 1, eta);
        assert!(c1 > 0.0 && c2 >= c1);
        for seed in 0..10 {
            let st = high_state(&p, &grid, 100 + seed);
            for j in (j_eps - 1)..=filter.j_max() {
                let s = lyapunov(&st, j, eta, &filter, &p).unwrap();
                if s.energy > 0.0 {
                    assert!(s.l2 >= c1 * s.energy * (1.0 - 1e-12) && s.l2 <= c2 * s.energy * (1.0 + 1e-12));
                }
            }
        }
        let tuned = calibrate_eta(&p, &filter, j_eps - 1, 4.0, 100.0);
        let (c1, c2) = lyapunov_equivalence(&p, &filter, j_eps - 1, tuned);
        assert!(c2 / c1 <= 4.0 + 1e-9 && c2 / c1 > 3.99);
    }

    #[test]
    fn rate_fit_examples() {
        let eps = [0.5, 0.25, 0.125, 0.0625];
        let f = rate_fit(&eps, &eps).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let sq: Vec<f64> = eps.iter().map(|e| e.sqrt()).collect();
        assert!((rate_fit(&eps, &sq).unwrap().slope - 0.5).abs() < 1e-12);
        let scaled: Vec<f64> = sq.iter().map(|e| 7.0 * e).collect();
        assert!((rate_fit(&eps, &scaled).unwrap().slope - 0.5).abs() < 1e-12);
        assert!(rate_fit(&eps, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(rate_fit(&eps[..2], &eps[..2]).is_err());
    }

    #[test]
    fn rate_fit_alternating_perturbation() {
        // closed form: log(1 ± 0.05) alternates, so the slope shifts by
        // Σ (x - x̄) δ_k / Σ (x - x̄)² with δ_k = ±log(1.05), ∓log(0.95)
        let eps: Vec<f64> = (3..8).map(|k| 2f64.powi(-k)).collect();
        let errs: Vec<f64> = eps
            .iter()
            .enumerate()
            .map(|(k, e)| 3.0 * e * (1.0 + if k % 2 == 0 { 0.05 } else { -0.05 }))
            .collect();
        let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let mx = x.iter().sum::<f64>() / 5.0;
        let d: Vec<f64> = (0..5).map(|k| if k % 2 == 0 { 1.05f64.ln() } else { 0.95f64.ln() }).collect();
        let md = d.iter().sum::<f64>() / 5.0;
        let shift = x.iter().zip(&d).map(|(a, b)| (a - mx) * (b - md)).sum::<f64>() / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let f = rate_fit(&eps, &errs).unwrap();
        assert!((f.slope - (1.0 + shift)).abs() < 1e-12);
        assert!((f.slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn identical_trajectories_give_zero_norms() {
        let grid = Grid::new(2, 1, 16, 1.0).unwrap();
        let p = quad2d(0.1);
        let filter = DyadicFilter::covering(&grid).unwrap();
        let m = random_perturbation(3, 1, 0.1, (0, 2), &grid, 1).unwrap();
        let mut st = well_prepared_init(&m, &p).unwrap();
        let mut h = ErrorHistories::new(filter.j_min());
        for k in 0..3 {
            st.t = k as f64 * 0.1;
            h.record(&filter, &st, &st.m.clone(), &p).unwrap();
        }
        let norms = error_norms(&h, &theorem_norms(2, &[0.5], 3)).unwrap();
        for (name, v) in norms {
            assert!(v < 1e-12, "{name} = {v}");
        }
    }

    #[test]
    fn single_mode_l1_norm_matches_direct_sum() {
        let grid = Grid::new(2, 1, 32, 1.0).unwrap();
        let filter = DyadicFilter::covering(&grid).unwrap();
        let amp = 0.3;
        let mode = SpectralField::from_fn(&grid, 1, |_, x| amp * (4.0 * x[0]).cos());
        let size = mode.l2_norm();
        let mut hist = TimeBlockHistory::new(filter.j_min());
        for k in 0..=4 {
            hist.record(k as f64 * 0.5, &filter, &mode).unwrap();
        }
        let norm = NormDef::new("u_l1", Target::U, TimeExp::One, false, vec![BesovSpec::b21(1.0)]);
        let expect: f64 = (filter.j_min()..=filter.j_max())
            .map(|j| 2f64.powi(j) * phi(4.0 / 2f64.powi(j)) * size)
            .sum::<f64>()
            * 2.0;
        assert!((norm.eval(&hist).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn report_marks_failures_and_rejections() {
        let eps = [0.5, 0.25, 0.125, 0.0625];
        let runs: Vec<std::result::Result<BTreeMap<String, f64>, String>> = eps
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                if k == 1 {
                    Err("numerical failure".to_string())
                } else {
                    Ok(BTreeMap::from([("a".to_string(), e), ("zero".to_string(), 0.0)]))
                }
            })
            .collect();
        let r = RateReport::assemble(&eps, &runs);
        assert_eq!(r.failures.len(), 1);
        assert!((r.fits["a"].slope - 1.0).abs() < 1e-12);
        assert!(r.rejected.contains_key("zero"));
        assert_eq!(r.errors["a"][1], None);
    }
}
