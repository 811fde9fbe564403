//! Fourier symbol of the linearised rescaled relaxation system.
//!
//! Per wavevector ξ the perturbation `(m̂, ŵ_1, …, ŵ_d)` obeys `∂_t U = Â(ξ) U` with
//!
//! ```text
//! Â(ξ) = | 0              -iξ_1/ε  …  -iξ_d/ε |
//!        | -i a_1 ξ_1/ε   -1/ε²            0   |
//!        | …                        ⋱         |
//!        | -i a_d ξ_d/ε   0           -1/ε²   |
//! ```
//!
//! The pair `(m̂, p)` with `p = ξ·ŵ` is invariant and carries the eigenvalues
//! `λ₃, λ₄ = -1/(2ε²) ± (1/(2ε)) √(1/ε² - 4 Σ a_i ξ_i²)`. The rest of w-space
//! decays like `e^{-t/ε²}` and only sees `m̂` through the forcing direction
//! `q = (a_i ξ_i)`. Every analytic function `F` of the symbol therefore acts as
//!
//! ```text
//! m̂ ← F₁₁ m̂ + F₁₂ p
//! ŵ ← F(-1/ε²) ŵ + (q / S) (F₂₁ m̂ + (F₂₂ - F(-1/ε²)) p),     S = Σ a_i ξ_i²
//! ```
//!
//! which [`ModeMap`] stores. The 2×2 block is written `F(B) = c I + s (B - μ I)`
//! around the midpoint `μ` of the two eigenvalues; `c` and `s` are real.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless threshold on `|Δ| ε²` below which a mode is tagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Relaxation parameter and wave-speed coefficients `A_i = a_i I_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolParams {
    eps: f64,
    a: Vec<f64>,
}

impl SymbolParams {
    pub fn new(eps: f64, a: Vec<f64>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("ε = {eps} ∉ (0,1)")));
        }
        if a.is_empty() || a.len() > 3 {
            return Err(Error::invalid(format!("need 1 to 3 coefficients a_i, got {}", a.len())));
        }
        if let Some((i, v)) = a.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("a_{} = {v} must be positive", i + 1)));
        }
        Ok(SymbolParams { eps, a })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `S = Σ a_i ξ_i²`.
    pub fn weighted_sq(&self, xi: &[f64]) -> f64 {
        self.a.iter().zip(xi).map(|(a, x)| a * x * x).sum()
    }

    /// Same parameters with another ε.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        SymbolParams::new(eps, self.a.clone())
    }
}

/// `Â(ξ)` as a dense complex matrix.
pub fn symbol_matrix(xi: &[f64], params: &SymbolParams) -> DMatrix<Complex64> {
    let d = params.dim();
    let eps = params.eps;
    let mut m = DMatrix::from_element(d + 1, d + 1, Complex64::new(0.0, 0.0));
    for k in 0..d {
        m[(0, k + 1)] = Complex64::new(0.0, -xi[k] / eps);
        m[(k + 1, 0)] = Complex64::new(0.0, -params.a[k] * xi[k] / eps);
        m[(k + 1, k + 1)] = Complex64::new(-1.0 / (eps * eps), 0.0);
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Real, distinct eigenvalues.
    Low,
    /// Double eigenvalue `-1/(2ε²)`.
    Degenerate,
    /// Complex conjugate pair with real part `-1/(2ε²)`.
    High,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Low => "low",
            Regime::Degenerate => "degenerate",
            Regime::High => "high",
        }
    }
}

/// Closed-form spectrum of `Â(ξ)` for one scalar component.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeEigen {
    /// `d - 1` copies of `-1/ε²` followed by `λ₃`, `λ₄`.
    pub lambdas: Vec<Complex64>,
    pub discriminant: f64,
    pub regime: Regime,
}

impl ModeEigen {
    pub fn lambda3(&self) -> Complex64 {
        self.lambdas[self.lambdas.len() - 2]
    }

    pub fn lambda4(&self) -> Complex64 {
        self.lambdas[self.lambdas.len() - 1]
    }
}

pub fn eigenvalues(xi: &[f64], params: &SymbolParams) -> ModeEigen {
    let eps = params.eps;
    let d = params.dim();
    let s = params.weighted_sq(xi);
    let disc = 1.0 / (eps * eps) - 4.0 * s;
    let mid = -0.5 / (eps * eps);
    let regime = if (disc * eps * eps).abs() < DEGENERACY_TOL {
        Regime::Degenerate
    } else if disc > 0.0 {
        Regime::Low
    } else {
        Regime::High
    };
    let (l3, l4) = if disc >= 0.0 {
        let l4 = mid - disc.sqrt() / (2.0 * eps);
        // λ₃ λ₄ = S/ε² avoids the cancellation in mid + √Δ/(2ε)
        let l3 = if l4 != 0.0 { (s / (eps * eps)) / l4 } else { mid };
        (Complex64::new(l3, 0.0), Complex64::new(l4, 0.0))
    } else {
        let im = (-disc).sqrt() / (2.0 * eps);
        (Complex64::new(mid, im), Complex64::new(mid, -im))
    };
    let mut lambdas = vec![Complex64::new(-1.0 / (eps * eps), 0.0); d - 1];
    lambdas.push(l3);
    lambdas.push(l4);
    ModeEigen {
        lambdas,
        discriminant: disc,
        regime,
    }
}

/// Linear map `F(Â(ξ))` in the reduced `(m̂, p)` + damped-complement form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMap {
    pub c11: Complex64,
    pub c12: Complex64,
    pub c21: Complex64,
    pub c22: Complex64,
    /// `F(-1/ε²)` on the complement of the forcing direction.
    pub damp: f64,
}

impl ModeMap {
    fn from_plane(c: f64, s: f64, b: f64, eps: f64, sw: f64, damp: f64) -> Self {
        ModeMap {
            c11: Complex64::new(c + b * s, 0.0),
            c12: Complex64::new(0.0, -s / eps),
            c21: Complex64::new(0.0, -sw * s / eps),
            c22: Complex64::new(c - b * s, 0.0),
            damp,
        }
    }

    /// `exp(t Â(ξ))` for `S = Σ a_i ξ_i²`.
    pub fn exp(sw: f64, eps: f64, t: f64) -> Self {
        let b = 0.5 / (eps * eps);
        let (c, s) = plane_exp(b, sw / (eps * eps), t);
        ModeMap::from_plane(c, s, b, eps, sw, (-t / (eps * eps)).exp())
    }

    /// `exp(t Â₀(ξ))` for the undamped transport part (no `-1/ε²` diagonal).
    pub fn transport(sw: f64, eps: f64, t: f64) -> Self {
        let (c, s) = plane_exp(0.0, sw / (eps * eps), t);
        ModeMap::from_plane(c, s, 0.0, eps, sw, 1.0)
    }

    /// `∫₀^h exp(τ Â(ξ)) dτ`.
    pub fn integral(sw: f64, eps: f64, h: f64) -> Self {
        let b = 0.5 / (eps * eps);
        let (c, s) = plane_integral(b, sw / (eps * eps), h);
        let damp = -(-h / (eps * eps)).exp_m1() * eps * eps;
        ModeMap::from_plane(c, s, b, eps, sw, damp)
    }

    /// Applies the map to one component: `m` and `w[i]` for each axis.
    /// `xi` and `q = (a_i ξ_i)` have length d; `sw = Σ a_i ξ_i²`.
    #[inline]
    pub fn apply(&self, xi: &[f64], q: &[f64], sw: f64, m: Complex64, w: &mut [Complex64]) -> Complex64 {
        let p: Complex64 = xi.iter().zip(w.iter()).map(|(x, wi)| wi * x).sum();
        let m_new = self.c11 * m + self.c12 * p;
        if sw > 0.0 {
            let kick = (self.c21 * m + (self.c22 - self.damp) * p) / sw;
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi = *wi * self.damp + kick * qi;
            }
        } else {
            for wi in w.iter_mut() {
                *wi *= self.damp;
            }
        }
        m_new
    }

    /// Dense `(d+1)×(d+1)` matrix of the map.
    pub fn to_matrix(&self, xi: &[f64], q: &[f64], sw: f64) -> DMatrix<Complex64> {
        let d = xi.len();
        let mut out = DMatrix::from_element(d + 1, d + 1, Complex64::new(0.0, 0.0));
        out[(0, 0)] = self.c11;
        for k in 0..d {
            out[(0, k + 1)] = self.c12 * xi[k];
            out[(k + 1, k + 1)] = Complex64::new(self.damp, 0.0);
        }
        if sw > 0.0 {
            for i in 0..d {
                let f = q[i] / sw;
                out[(i + 1, 0)] = self.c21 * f;
                for k in 0..d {
                    out[(i + 1, k + 1)] += (self.c22 - self.damp) * f * xi[k];
                }
            }
        }
        out
    }
}

/// `exp(Δt Â(ξ))` in closed form.
pub fn propagator(xi: &[f64], params: &SymbolParams, dt: f64) -> DMatrix<Complex64> {
    let sw = params.weighted_sq(xi);
    let q: Vec<f64> = params.a.iter().zip(xi).map(|(a, x)| a * x).collect();
    ModeMap::exp(sw, params.eps, dt).to_matrix(xi, &q, sw)
}

/// Real scalars `(c, s)` with `exp(t B) = c I + s (B + b I)` for the 2×2 block
/// `B` whose eigenvalues are `-b ± δ`, `δ² = b² - sr`:
/// `c = e^{-bt} cosh(δt)`, `s = e^{-bt} sinh(δt)/δ`.
pub fn plane_exp(b: f64, sr: f64, t: f64) -> (f64, f64) {
    let delta2 = b * b - sr;
    let x = delta2 * t * t;
    if x.abs() < 1e-2 {
        let e = (-b * t).exp();
        let c = 1.0 + x / 2.0 * (1.0 + x / 12.0 * (1.0 + x / 30.0 * (1.0 + x / 56.0 * (1.0 + x / 90.0))));
        let s = 1.0 + x / 6.0 * (1.0 + x / 20.0 * (1.0 + x / 42.0 * (1.0 + x / 72.0 * (1.0 + x / 110.0))));
        (e * c, e * t * s)
    } else if delta2 > 0.0 {
        let delta = delta2.sqrt();
        let lp = -sr / (b + delta);
        let lm = -b - delta;
        let (ep, em) = ((lp * t).exp(), (lm * t).exp());
        (0.5 * (ep + em), (ep - em) / (2.0 * delta))
    } else {
        let omega = (-delta2).sqrt();
        let e = (-b * t).exp();
        (e * (omega * t).cos(), e * (omega * t).sin() / omega)
    }
}

/// `∫₀^h` of the two scalars returned by [`plane_exp`].
pub fn plane_integral(b: f64, sr: f64, h: f64) -> (f64, f64) {
    let delta2 = b * b - sr;
    let reach = if b > 0.0 { h.min(1.0 / b) } else { h };
    if (delta2 * reach * reach).abs() < 1e-2 {
        // even/odd Taylor series of cosh, sinh/δ against exponential moments
        let moments = damped_moments(b, h, 26);
        let (mut c, mut s) = (0.0, 0.0);
        let mut coef = 1.0;
        for k in 0..13 {
            if k > 0 {
                coef *= delta2 / ((2 * k - 1) as f64 * (2 * k) as f64);
            }
            c += coef * moments[2 * k];
            s += coef / (2 * k + 1) as f64 * moments[2 * k + 1];
        }
        (c, s)
    } else if delta2 > 0.0 {
        let delta = delta2.sqrt();
        let lp = -sr / (b + delta);
        let lm = -b - delta;
        let (fp, fm) = (exp_integral(lp, h), exp_integral(lm, h));
        (0.5 * (fp + fm), (fp - fm) / (2.0 * delta))
    } else {
        let omega = (-delta2).sqrt();
        let lam = Complex64::new(-b, omega);
        let wh = omega * h;
        let re = (-b * h).exp_m1() * wh.cos() - 2.0 * (0.5 * wh).sin().powi(2);
        let im = (-b * h).exp() * wh.sin();
        let f = Complex64::new(re, im) / lam;
        (f.re, f.im / omega)
    }
}

/// `∫₀^h e^{λτ} dτ` for real λ.
fn exp_integral(lam: f64, h: f64) -> f64 {
    if lam == 0.0 {
        h
    } else {
        (lam * h).exp_m1() / lam
    }
}

/// `M_n = ∫₀^h τ^n e^{-bτ} dτ` for `n < count`, `b >= 0`.
fn damped_moments(b: f64, h: f64, count: usize) -> Vec<f64> {
    let y = b * h;
    let unit = if y > 50.0 { unit_moments_recursive(y, count) } else { unit_moments_series(y, count) };
    let mut hp = h;
    unit.iter()
        .map(|&j| {
            let v = hp * j;
            hp *= h;
            v
        })
        .collect()
}

/// `J_n(y) = e^{-y} Σ_k y^k / ((n+1)(n+2)…(n+k+1))`, positive terms.
fn unit_moments_series(y: f64, count: usize) -> Vec<f64> {
    let ey = (-y).exp();
    (0..count)
        .map(|n| {
            let mut term = 1.0 / (n + 1) as f64;
            let mut sum = term;
            let mut k = 1usize;
            while term > 1e-18 * sum && k < 1000 {
                term *= y / (n + k + 1) as f64;
                sum += term;
                k += 1;
            }
            ey * sum
        })
        .collect()
}

/// Upward recursion `J_n = (n J_{n-1} - e^{-y}) / y`, stable for `y` beyond the order.
fn unit_moments_recursive(y: f64, count: usize) -> Vec<f64> {
    let ey = (-y).exp();
    let mut unit = vec![-(-y).exp_m1() / y; count];
    for n in 1..count {
        unit[n] = (n as f64 * unit[n - 1] - ey) / y;
    }
    unit
}

/// One row of the overdamping table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub eps: f64,
    /// Least negative nonzero real part of the spectrum.
    pub gap: f64,
    pub regime: Regime,
}

/// Spectral gap at fixed ξ as ε varies.
pub fn overdamping_curve(a: &[f64], xi: &[f64], eps_list: &[f64]) -> Result<Vec<GapRow>> {
    eps_list
        .iter()
        .map(|&eps| {
            let params = SymbolParams::new(eps, a.to_vec())?;
            let eig = eigenvalues(xi, &params);
            let gap = eig
                .lambdas
                .iter()
                .map(|l| l.re)
                .filter(|&re| re != 0.0)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(GapRow {
                eps,
                gap,
                regime: eig.regime,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn params_validation() {
        assert!(SymbolParams::new(1.5, vec![1.0]).is_err());
        assert!(SymbolParams::new(0.0, vec![1.0]).is_err());
        assert!(SymbolParams::new(0.5, vec![1.0, 0.0]).is_err());
        assert!(SymbolParams::new(0.5, vec![]).is_err());
        assert!(SymbolParams::new(0.5, vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn symbol_at_zero_and_trace() {
        let p = SymbolParams::new(0.25, vec![1.0, 2.0]).unwrap();
        let m = symbol_matrix(&[0.0, 0.0], &p);
        let expect = [0.0, -16.0, -16.0];
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert_eq!(m[(i, j)], Complex64::new(e, 0.0));
            }
        }
        let m = symbol_matrix(&[1.3, -0.7], &p);
        assert!((m.trace() - Complex64::new(-32.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn characteristic_polynomial_d3() {
        // det(Â - λI) = (λ+1)²(λ²+λ+1) for ε = 1, a = 1, ξ = e₁
        let p = SymbolParams { eps: 1.0, a: vec![1.0; 3] };
        let m = symbol_matrix(&[1.0, 0.0, 0.0], &p);
        for lam in [Complex64::new(0.3, 0.2), Complex64::new(-2.0, 1.0), Complex64::new(1.5, 0.0)] {
            let mut shifted = m.clone();
            for i in 0..4 {
                shifted[(i, i)] -= lam;
            }
            let det = shifted.determinant();
            let expect = (lam + 1.0).powu(2) * (lam * lam + lam + 1.0);
            assert!(close(det, expect, 1e-12), "{det} vs {expect}");
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let p = SymbolParams::new(0.125, vec![1.0, 3.0]).unwrap();
        let e = eigenvalues(&[0.0, 0.0], &p);
        assert_eq!(e.lambda3(), Complex64::new(0.0, 0.0));
        assert_eq!(e.lambda4(), Complex64::new(-64.0, 0.0));
        assert_eq!(e.lambdas.len(), 3);

        // Σ a ξ² = 1/(4ε²) = 16
        let e = eigenvalues(&[4.0, 0.0], &p);
        assert_eq!(e.regime, Regime::Degenerate);
        assert!(close(e.lambda3(), Complex64::new(-32.0, 0.0), 1e-12));
        assert!(close(e.lambda4(), Complex64::new(-32.0, 0.0), 1e-12));

        let p1 = SymbolParams { eps: 1.0, a: vec![1.0; 3] };
        let e = eigenvalues(&[1.0, 0.0, 0.0], &p1);
        let s3 = 3f64.sqrt() / 2.0;
        assert_eq!(e.regime, Regime::High);
        assert!(close(e.lambda3(), Complex64::new(-0.5, s3), 1e-15));
        assert!(close(e.lambda4(), Complex64::new(-0.5, -s3), 1e-15));
        assert_eq!(e.lambdas[0], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn vieta_relations() {
        for &(eps, xi) in &[(0.5, 0.3), (0.01, 2.0), (0.01, 200.0), (0.2, 2.5)] {
            let p = SymbolParams::new(eps, vec![1.7]).unwrap();
            let e = eigenvalues(&[xi], &p);
            let sum = e.lambda3() + e.lambda4();
            let prod = e.lambda3() * e.lambda4();
            let scale = 1.0 / (eps * eps);
            assert!((sum.re + scale).abs() < 1e-10 * scale);
            let sw = 1.7 * xi * xi / (eps * eps);
            assert!((prod - Complex64::new(sw, 0.0)).norm() < 1e-10 * sw.max(1.0));
        }
    }

    #[test]
    fn propagator_at_zero() {
        let p = SymbolParams::new(0.25, vec![1.0, 1.0]).unwrap();
        let m = propagator(&[0.0, 0.0], &p, 0.01);
        let d = (-0.01f64 * 16.0).exp();
        assert!(close(m[(0, 0)], Complex64::new(1.0, 0.0), 1e-15));
        assert!(close(m[(1, 1)], Complex64::new(d, 0.0), 1e-15));
        assert!(close(m[(2, 2)], Complex64::new(d, 0.0), 1e-15));
        assert!(m[(0, 1)].norm() + m[(1, 0)].norm() + m[(1, 2)].norm() < 1e-15);
    }

    #[test]
    fn propagator_semigroup() {
        let p = SymbolParams::new(0.1, vec![0.7, 2.0]).unwrap();
        for xi in [[0.3, -1.2], [5.0, 0.0], [3.0, 4.0], [1.0, 1.0]] {
            let a = propagator(&xi, &p, 0.013);
            let b = propagator(&xi, &p, 0.021);
            let ab = propagator(&xi, &p, 0.034);
            assert!((&a * &b - ab).norm() < 1e-12);
        }
    }

    #[test]
    fn propagator_matches_matrix_exponential() {
        for &(eps, dt) in &[(0.5, 0.3), (0.1, 0.004), (0.05, 0.01), (0.02, 1e-4)] {
            let p = SymbolParams::new(eps, vec![1.3, 0.6]).unwrap();
            let crit = 0.5 / eps / 1.3f64.sqrt();
            for xi in [[0.1, 0.0], [crit, 0.0], [crit * 1.0001, 0.0], [3.0, -2.0], [40.0, 7.0]] {
                let oracle = (symbol_matrix(&xi, &p) * Complex64::new(dt, 0.0)).exp();
                let ours = propagator(&xi, &p, dt);
                assert!((&ours - &oracle).norm() < 1e-10 * oracle.norm().max(1.0), "{eps} {xi:?}");
            }
        }
    }

    #[test]
    fn series_and_closed_forms_agree_at_switch() {
        for &(b, sr) in &[(2.0f64, 3.99f64), (2.0, 4.01), (0.0, 0.5)] {
            let t_switch = (1e-2 / (b * b - sr).abs()).sqrt();
            let lo = plane_exp(b, sr, t_switch * (1.0 - 1e-14));
            let hi = plane_exp(b, sr, t_switch * (1.0 + 1e-14));
            assert!((lo.0 - hi.0).abs() < 1e-12 && (lo.1 - hi.1).abs() < 1e-12, "{lo:?} {hi:?}");
        }
    }

    #[test]
    fn plane_integral_matches_quadrature() {
        // composite Simpson on a fine mesh as an independent reference
        let cases = [(0.5, 0.2, 1.0), (0.5, 0.25, 1.0), (0.5, 3.0, 2.0), (50.0, 10.0, 0.3), (50.0, 2500.0, 0.1), (8.0, 64.000001, 0.5)];
        for &(b, sr, h) in &cases {
            let n = 20000;
            let dx = h / n as f64;
            let (mut qc, mut qs) = (0.0, 0.0);
            for i in 0..=n {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let (c, s) = plane_exp(b, sr, i as f64 * dx);
                qc += w * c;
                qs += w * s;
            }
            qc *= dx / 3.0;
            qs *= dx / 3.0;
            let (c, s) = plane_integral(b, sr, h);
            assert!((c - qc).abs() < 1e-9 * qc.abs().max(1e-3), "c {c} vs {qc} for {b} {sr} {h}");
            assert!((s - qs).abs() < 1e-9 * qs.abs().max(1e-3), "s {s} vs {qs} for {b} {sr} {h}");
        }
    }

    #[test]
    fn unit_moment_branches_agree() {
        for y in [30.0, 50.0, 70.0] {
            let a = unit_moments_series(y, 26);
            let b = unit_moments_recursive(y, 26);
            for (n, (x, z)) in a.iter().zip(&b).enumerate() {
                assert!((x - z).abs() < 1e-12 * x.abs(), "y {y} n {n}: {x} {z}");
            }
        }
        let m = damped_moments(0.0, 2.0, 4);
        assert_eq!(m, vec![2.0, 2.0, 8.0 / 3.0, 4.0]);
    }

    #[test]
    fn overdamping_examples() {
        let rows = overdamping_curve(&[1.0], &[0.1], &[0.999_999_999]).unwrap();
        let expect = (-1.0 + (1.0f64 - 0.04).sqrt()) / 2.0;
        assert!((rows[0].gap - expect).abs() < 1e-8);
        assert!((expect + 0.010_102_051_443_364_4).abs() < 1e-12);

        let xi = 0.5;
        let eps: Vec<f64> = (0..8).map(|k| xi / 10.0 / 2f64.powi(k)).collect();
        for row in overdamping_curve(&[1.0], &[xi], &eps).unwrap() {
            assert!((row.gap + xi * xi).abs() < 0.01 * xi * xi);
        }

        let rows = overdamping_curve(&[2.0, 1.0], &[3.0, 1.0], &[0.25]).unwrap();
        assert_eq!(rows[0].regime, Regime::High);
        assert_eq!(rows[0].gap, -0.5 / 0.0625);
    }
}
