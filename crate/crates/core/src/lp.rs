//! Discrete Littlewood-Paley decomposition on the periodic grid.
//!
//! The radial cutoff `χ` equals 1 on `[0, 3/4]`, vanishes beyond `4/3`, and
//! interpolates with the `C^∞` transition `ψ(x) = g(x) / (g(x) + g(1 - x))`,
//! `g(x) = exp(-1/x)`. Dyadic blocks use `φ(ρ) = χ(ρ/2) - χ(ρ)`, supported in
//! `[3/4, 8/3]`. Homogeneous norms skip the zero mode: on the torus the mean
//! has no homogeneous counterpart.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralField};

const CHI_INNER: f64 = 0.75;
const CHI_OUTER: f64 = 4.0 / 3.0;

fn transition_g(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn transition_psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = transition_g(x);
        a / (a + transition_g(1.0 - x))
    }
}

/// Radial low-pass profile χ(ρ).
pub fn chi(rho: f64) -> f64 {
    transition_psi((CHI_OUTER - rho) / (CHI_OUTER - CHI_INNER))
}

/// Annulus profile φ(ρ) = χ(ρ/2) − χ(ρ).
pub fn phi(rho: f64) -> f64 {
    chi(0.5 * rho) - chi(rho)
}

/// Frequency range selector for Besov norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Range {
    All,
    /// Blocks `j <= J_ε`.
    Low(i32),
    /// Blocks `j >= J_ε - 1`.
    High(i32),
}

impl Range {
    pub fn contains(&self, j: i32) -> bool {
        match *self {
            Range::All => true,
            Range::Low(jeps) => j <= jeps,
            Range::High(jeps) => j >= jeps - 1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Range::All => "all",
            Range::Low(_) => "low",
            Range::High(_) => "high",
        }
    }
}

/// Summation exponent in j (p is fixed to 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumExp {
    One,
    Inf,
}

impl SumExp {
    pub fn label(&self) -> &'static str {
        match self {
            SumExp::One => "1",
            SumExp::Inf => "inf",
        }
    }
}

/// `Ḃ^s_{2,r}` restricted to a frequency range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    pub s: f64,
    pub r: SumExp,
    pub range: Range,
}

impl BesovSpec {
    pub fn new(s: f64, r: SumExp, range: Range) -> Self {
        BesovSpec { s, r, range }
    }

    /// `Ḃ^s_{2,1}` over all blocks.
    pub fn b21(s: f64) -> Self {
        BesovSpec::new(s, SumExp::One, Range::All)
    }

    /// Aggregates per-block L² norms `blocks[j - j_min]`.
    pub fn aggregate(&self, j_min: i32, blocks: &[f64]) -> f64 {
        let weighted = blocks
            .iter()
            .enumerate()
            .map(|(k, &b)| (j_min + k as i32, b))
            .filter(|&(j, _)| self.range.contains(j))
            .map(|(j, b)| 2f64.powf(j as f64 * self.s) * b);
        match self.r {
            SumExp::One => weighted.sum(),
            SumExp::Inf => weighted.fold(0.0, f64::max),
        }
    }
}

/// Cached multipliers `φ(2^{-j}|ξ|)` for `j_min..=j_max` on one grid.
#[derive(Clone, Debug)]
pub struct DyadicFilter {
    grid: Arc<Grid>,
    j_min: i32,
    j_max: i32,
    phi_values: Vec<Vec<f64>>,
}

impl DyadicFilter {
    /// Builds the filter over an explicit block range. Every block must meet the
    /// band of nonzero grid wavenumbers.
    pub fn build(grid: &Arc<Grid>, j_min: i32, j_max: i32) -> Result<Self> {
        if j_min >= j_max {
            return Err(Error::invalid(format!("empty block range {j_min}..={j_max}")));
        }
        let lo = grid.xi_min();
        let hi = grid.xi_max();
        if 2f64.powi(j_min) * 8.0 / 3.0 <= lo {
            return Err(Error::invalid(format!(
                "block {j_min} lies below the box scale (|ξ| >= {lo})"
            )));
        }
        if 2f64.powi(j_max) * 0.75 >= hi {
            return Err(Error::invalid(format!(
                "block {j_max} lies above the grid cutoff (|ξ| <= {hi})"
            )));
        }
        let phi_values = (j_min..=j_max)
            .map(|j| {
                let scale = 2f64.powi(-j);
                (0..grid.len()).map(|idx| phi(scale * grid.xi_norm(idx))).collect()
            })
            .collect();
        Ok(DyadicFilter {
            grid: Arc::clone(grid),
            j_min,
            j_max,
            phi_values,
        })
    }

    /// Smallest block range whose union covers every nonzero grid wavenumber.
    pub fn covering(grid: &Arc<Grid>) -> Result<Self> {
        let j_min = (grid.xi_min() * 0.75).log2().floor() as i32;
        let j_max = (grid.xi_max() / 1.5).log2().ceil() as i32;
        Self::build(grid, j_min, j_max)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Multiplier of block `j` at flat mode index `idx`.
    pub fn multiplier(&self, j: i32, idx: usize) -> f64 {
        self.phi_values[(j - self.j_min) as usize][idx]
    }

    fn check_block(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::invalid(format!(
                "block {j} outside {}..={}",
                self.j_min, self.j_max
            )));
        }
        Ok(())
    }

    fn check_grid(&self, field: &SpectralField) {
        assert!(
            Arc::ptr_eq(field.grid(), &self.grid),
            "field and filter live on different grids"
        );
    }

    /// Δ_j u.
    pub fn block(&self, field: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_block(j)?;
        self.check_grid(field);
        let mult = &self.phi_values[(j - self.j_min) as usize];
        let mut out = field.clone();
        let len = self.grid.len();
        for (i, c) in out.data_mut().iter_mut().enumerate() {
            *c *= mult[i % len];
        }
        Ok(out)
    }

    /// ‖Δ_j u‖_{L²} for every block, all components together.
    pub fn block_norms(&self, field: &SpectralField) -> Vec<f64> {
        self.check_grid(field);
        let len = self.grid.len();
        let mut energy = vec![0.0; self.phi_values.len()];
        for c in 0..field.ncomp() {
            let data = field.comp(c);
            for idx in 1..len {
                let e = data[idx].norm_sqr();
                if e == 0.0 {
                    continue;
                }
                for (acc, mult) in energy.iter_mut().zip(&self.phi_values) {
                    let m = mult[idx];
                    if m != 0.0 {
                        *acc += m * m * e;
                    }
                }
            }
        }
        let vol = self.grid.volume();
        energy.into_iter().map(|e| (vol * e).sqrt()).collect()
    }

    /// Homogeneous Besov norm.
    pub fn besov_norm(&self, field: &SpectralField, spec: &BesovSpec) -> f64 {
        spec.aggregate(self.j_min, &self.block_norms(field))
    }

    /// Sum of two Besov norms, the norm of `Ḃ^{s1} ∩ Ḃ^{s2}`.
    pub fn intersection_norm(&self, field: &SpectralField, specs: &[BesovSpec]) -> f64 {
        let blocks = self.block_norms(field);
        specs.iter().map(|s| s.aggregate(self.j_min, &blocks)).sum()
    }

    /// Sum of multipliers of blocks `j <= j_top`, clamped to the filter range.
    fn low_multiplier(&self, j_top: i32, idx: usize) -> f64 {
        let top = j_top.min(self.j_max);
        (self.j_min..=top).map(|j| self.multiplier(j, idx)).sum()
    }

    /// `u^ℓ = Σ_{j <= J_ε - 1} Δ_j u` and `u^h = u - mean - u^ℓ`.
    pub fn split_lowhigh(&self, field: &SpectralField, j_eps: i32) -> (SpectralField, SpectralField) {
        self.check_grid(field);
        let len = self.grid.len();
        let mult: Vec<f64> = (0..len)
            .map(|idx| if idx == 0 { 0.0 } else { self.low_multiplier(j_eps - 1, idx) })
            .collect();
        let mut low = field.clone();
        let mut high = field.clone();
        for (i, (l, h)) in low.data_mut().iter_mut().zip(high.data_mut().iter_mut()).enumerate() {
            let idx = i % len;
            if idx == 0 {
                *l = Complex64::new(0.0, 0.0);
                *h = Complex64::new(0.0, 0.0);
            } else {
                let c = *l;
                *l = c * mult[idx];
                *h = c - *l;
            }
        }
        (low, high)
    }
}

/// Frequency threshold `J_ε = -⌊log₂ ε⌋ - k₀`.
pub fn threshold(eps: f64, k0: i32) -> Result<i32> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε = {eps} ∉ (0,1)")));
    }
    Ok(-(eps.log2().floor() as i32) - k0)
}

/// Block L² norms sampled at increasing time stamps.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TimeBlockHistory {
    j_min: i32,
    times: Vec<f64>,
    blocks: Vec<Vec<f64>>,
}

/// Time exponent for Chemin-Lerner aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeExp {
    One,
    Two,
    Inf,
}

impl TimeExp {
    pub fn label(&self) -> &'static str {
        match self {
            TimeExp::One => "1",
            TimeExp::Two => "2",
            TimeExp::Inf => "inf",
        }
    }
}

impl TimeBlockHistory {
    pub fn new(j_min: i32) -> Self {
        TimeBlockHistory {
            j_min,
            times: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn blocks_at(&self, k: usize) -> &[f64] {
        &self.blocks[k]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends one snapshot of block norms.
    pub fn push(&mut self, t: f64, blocks: Vec<f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::invalid(format!("time stamp {t} not after {last}")));
            }
            if blocks.len() != self.blocks[0].len() {
                return Err(Error::invalid("block count changed within a history"));
            }
        }
        if blocks.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
            return Err(Error::invalid("block norms must be finite and non-negative"));
        }
        self.times.push(t);
        self.blocks.push(blocks);
        Ok(())
    }

    pub fn record(&mut self, t: f64, filter: &DyadicFilter, field: &SpectralField) -> Result<()> {
        self.push(t, filter.block_norms(field))
    }

    fn check_rho(&self, rho: TimeExp) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::invalid("empty time history"));
        }
        if rho != TimeExp::Inf && self.times.len() < 2 {
            return Err(Error::invalid("time integration needs at least two stamps"));
        }
        Ok(())
    }

    fn trapezoid(&self, values: impl Fn(usize) -> f64) -> f64 {
        self.times
            .windows(2)
            .enumerate()
            .map(|(k, w)| 0.5 * (w[1] - w[0]) * (values(k) + values(k + 1)))
            .sum()
    }

    /// Chemin-Lerner norm `L̃^ρ_T(Ḃ^s_{2,r})`: time integration inside each block.
    pub fn chemin_lerner(&self, rho: TimeExp, spec: &BesovSpec) -> Result<f64> {
        self.check_rho(rho)?;
        let nblocks = self.blocks[0].len();
        let per_block: Vec<f64> = (0..nblocks)
            .map(|b| match rho {
                TimeExp::Inf => self.blocks.iter().map(|row| row[b]).fold(0.0, f64::max),
                TimeExp::One => self.trapezoid(|k| self.blocks[k][b]),
                TimeExp::Two => self.trapezoid(|k| self.blocks[k][b].powi(2)).sqrt(),
            })
            .collect();
        Ok(spec.aggregate(self.j_min, &per_block))
    }

    /// Plain `L^ρ_T(Ḃ^s_{2,r})` of an intersection norm: the Besov norms are summed
    /// at each time, then integrated (or maximised) in time.
    pub fn lebesgue(&self, rho: TimeExp, specs: &[BesovSpec]) -> Result<f64> {
        self.check_rho(rho)?;
        let at = |k: usize| -> f64 { specs.iter().map(|s| s.aggregate(self.j_min, &self.blocks[k])).sum() };
        Ok(match rho {
            TimeExp::Inf => (0..self.times.len()).map(at).fold(0.0, f64::max),
            TimeExp::One => self.trapezoid(at),
            TimeExp::Two => self.trapezoid(|k| at(k).powi(2)).sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid1(n: usize) -> Arc<Grid> {
        Grid::new(1, 1, n, 1.0).unwrap()
    }

    fn mode(grid: &Arc<Grid>, k: f64) -> SpectralField {
        SpectralField::from_fn(grid, 1, move |_, x| (k * x[0]).cos())
    }

    #[test]
    fn chi_and_phi_supports() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        assert_eq!(phi(0.5), 0.0);
        assert_eq!(phi(3.0), 0.0);
        assert_eq!(phi(0.74), 0.0);
        assert_eq!(phi(2.7), 0.0);
        let mut prev = 1.0;
        for i in 0..=400 {
            let v = chi(i as f64 * 0.005);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn phi_at_one_matches_closed_form() {
        // χ(1) = ψ(4/7) = 1 / (1 + e^{-7/12}), so φ(1) = 1 / (1 + e^{7/12})
        let golden = 1.0 / (1.0 + (7.0f64 / 12.0).exp());
        assert!((phi(1.0) - golden).abs() < 1e-15);
        assert!((golden - 0.358_165_954_911_269).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity_on_band() {
        let (j_min, j_max) = (-3, 6);
        let lo = 1.5 * 2f64.powi(j_min);
        let hi = 2f64.powi(j_max);
        for i in 0..=2000 {
            let rho = lo * (hi / lo).powf(i as f64 / 2000.0);
            let s: f64 = (j_min..=j_max).map(|j| phi(2f64.powi(-j) * rho)).sum();
            assert!((s - 1.0).abs() <= 1e-12, "ρ = {rho}: {s}");
        }
    }

    #[test]
    fn filter_range_validation() {
        let g = grid1(64);
        assert!(DyadicFilter::build(&g, 3, 3).is_err());
        assert!(DyadicFilter::build(&g, -4, 4).is_err());
        assert!(DyadicFilter::build(&g, -1, 7).is_err());
        let f = DyadicFilter::covering(&g).unwrap();
        assert_eq!((f.j_min(), f.j_max()), (-1, 5));
        assert!(f.block(&mode(&g, 2.0), 9).is_err());
    }

    #[test]
    fn single_mode_blocks() {
        let g = grid1(128);
        let f = DyadicFilter::covering(&g).unwrap();
        let j0 = 3;
        let u = mode(&g, 8.0);
        for j in f.blocks() {
            let b = f.block(&u, j).unwrap();
            if j <= j0 - 2 || j >= j0 + 1 {
                assert!(b.max_abs_coefficient() < 1e-15, "block {j}");
            }
        }
        let b = f.block(&u, j0).unwrap();
        let idx = g.mode_index([8, 0, 0]).unwrap();
        assert!((b.comp(0)[idx].re - phi(1.0) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn blocks_sum_to_mean_free_field() {
        let g = Grid::new(2, 1, 32, 1.0).unwrap();
        let u = SpectralField::from_fn(&g, 1, |_, x| 1.0 + (x[0] + 2.0 * x[1]).sin() + 0.3 * (5.0 * x[1]).cos());
        let f = DyadicFilter::covering(&g).unwrap();
        let mut sum = SpectralField::zeros(&g, 1);
        for j in f.blocks() {
            sum.axpy(1.0, &f.block(&u, j).unwrap());
        }
        assert!(sum.sub(&u.mean_free()).max_abs_coefficient() < 1e-12);
    }

    #[test]
    fn single_mode_norm_is_l2() {
        let g = grid1(64);
        let f = DyadicFilter::covering(&g).unwrap();
        let u = mode(&g, 3.0);
        let unit = u.scaled(1.0 / u.l2_norm());
        let b = f.besov_norm(&unit, &BesovSpec::b21(0.0));
        assert!((b - 1.0).abs() < 1e-12);
        let b2 = f.besov_norm(&unit.scaled(-2.0), &BesovSpec::b21(0.7));
        assert!((b2 - 2.0 * f.besov_norm(&unit, &BesovSpec::b21(0.7))).abs() < 1e-12);
    }

    #[test]
    fn two_mode_norm_matches_brute_force() {
        let g = grid1(64);
        let f = DyadicFilter::covering(&g).unwrap();
        let u = SpectralField::from_fn(&g, 1, |_, x| x[0].cos() + (4.0 * x[0]).cos());
        // each unit-amplitude cosine has box L² norm √π
        let amp = std::f64::consts::PI.sqrt();
        let mut golden = 0.0;
        for j in -1..=5 {
            let w = 2f64.powi(-j);
            let e = (phi(w * 1.0).powi(2) + phi(w * 4.0).powi(2)) * amp * amp;
            golden += 2f64.powi(j) * e.sqrt();
        }
        let b = f.besov_norm(&u, &BesovSpec::b21(1.0));
        assert!((b - golden).abs() < 1e-12 * golden, "{b} vs {golden}");
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold(2f64.powi(-5), 2).unwrap(), 3);
        assert_eq!(2f64.powi(-5) * 2f64.powi(3), 0.25);
        assert_eq!(threshold(1.0 / 3.0, 2).unwrap(), 0);
        assert_eq!(threshold(0.5, 0).unwrap(), 1);
        assert!(threshold(1.0, 2).is_err());
        assert!(threshold(0.0, 2).is_err());
        assert!(threshold(-0.5, 2).is_err());
    }

    #[test]
    fn split_examples() {
        let g = grid1(256);
        let f = DyadicFilter::covering(&g).unwrap();
        let jeps = 4;
        let high_mode = mode(&g, 2f64.powi(jeps + 3));
        let (low, _) = f.split_lowhigh(&high_mode, jeps);
        assert!(low.max_abs_coefficient() < 1e-15);
        let low_mode = mode(&g, 2f64.powi(jeps - 4));
        let (_, high) = f.split_lowhigh(&low_mode, jeps);
        assert!(high.max_abs_coefficient() < 1e-15);
    }

    #[test]
    fn chemin_lerner_examples() {
        let mut h = TimeBlockHistory::new(0);
        h.push(0.0, vec![1.0]).unwrap();
        h.push(1.0, vec![3.0]).unwrap();
        let s = 0.5;
        let v = h.chemin_lerner(TimeExp::Two, &BesovSpec::b21(s)).unwrap();
        assert!((v - ((1.0 + 9.0) / 2.0f64).sqrt()).abs() < 1e-14);
        let mut h1 = TimeBlockHistory::new(2);
        h1.push(0.0, vec![2.0]).unwrap();
        let v = h1.chemin_lerner(TimeExp::Two, &BesovSpec::b21(s));
        assert!(v.is_err());
        assert!((h1.chemin_lerner(TimeExp::Inf, &BesovSpec::b21(1.0)).unwrap() - 8.0).abs() < 1e-14);
        assert!(TimeBlockHistory::new(0).chemin_lerner(TimeExp::Inf, &BesovSpec::b21(0.0)).is_err());
        assert!(h.push(0.5, vec![1.0]).is_err());
    }

    #[test]
    fn constant_history_integrates_to_t_times_norm() {
        let g = grid1(32);
        let f = DyadicFilter::covering(&g).unwrap();
        let u = SpectralField::from_fn(&g, 1, |_, x| (2.0 * x[0]).sin() + 0.2 * (7.0 * x[0]).cos());
        let spec = BesovSpec::b21(0.5);
        let mut h = TimeBlockHistory::new(f.j_min());
        for k in 0..=10 {
            h.record(0.3 * k as f64, &f, &u).unwrap();
        }
        let norm = f.besov_norm(&u, &spec);
        assert!((h.chemin_lerner(TimeExp::One, &spec).unwrap() - 3.0 * norm).abs() < 1e-12);
        assert!((h.lebesgue(TimeExp::One, &[spec]).unwrap() - 3.0 * norm).abs() < 1e-12);
    }
}
