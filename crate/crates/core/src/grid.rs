//! Periodic spectral grids and n-component Fourier fields.
//!
//! A [`Grid`] discretises the torus `[0, 2πL)^d` with `N` points per axis.
//! Wavenumbers along an axis are `k / L` with `k ∈ {-N/2+1, …, N/2}`.
//! A [`SpectralField`] stores the normalised Fourier coefficients
//! `c_k = N^{-d} Σ_x u(x) e^{-i k·x/L}` of a real field, component-slowest.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Periodic tensor grid in `d ∈ {1, 2, 3}` dimensions.
pub struct Grid {
    dim: usize,
    components: usize,
    points: usize,
    box_scale: f64,
    wavevectors: Vec<[f64; 3]>,
    wavenumbers: Vec<[i64; 3]>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("components", &self.components)
            .field("points", &self.points)
            .field("box_scale", &self.box_scale)
            .finish()
    }
}

impl Grid {
    /// Builds a grid with `points` samples per axis and box scale `L` (period `2πL`).
    /// `components` is the number of components `n` of the conserved unknown.
    pub fn new(dim: usize, components: usize, points: usize, box_scale: f64) -> Result<Arc<Grid>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("dimension {dim} not in {{1, 2, 3}}")));
        }
        if components == 0 {
            return Err(Error::invalid("number of components must be positive"));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::invalid(format!(
                "points per axis {points} must be a power of two >= 8"
            )));
        }
        if !(box_scale.is_finite() && box_scale > 0.0) {
            return Err(Error::invalid(format!("box scale {box_scale} must be positive")));
        }
        let len = points.pow(dim as u32);
        let mut wavevectors = Vec::with_capacity(len);
        let mut wavenumbers = Vec::with_capacity(len);
        for idx in 0..len {
            let mut k = [0i64; 3];
            let mut rest = idx;
            for axis in (0..dim).rev() {
                let i = rest % points;
                rest /= points;
                k[axis] = signed_wavenumber(i, points);
            }
            wavenumbers.push(k);
            wavevectors.push([
                k[0] as f64 / box_scale,
                k[1] as f64 / box_scale,
                k[2] as f64 / box_scale,
            ]);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(points);
        let inv = planner.plan_fft_inverse(points);
        Ok(Arc::new(Grid {
            dim,
            components,
            points,
            box_scale,
            wavevectors,
            wavenumbers,
            fwd,
            inv,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn box_scale(&self) -> f64 {
        self.box_scale
    }

    /// Number of grid points (and Fourier modes) per component.
    pub fn len(&self) -> usize {
        self.wavevectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavevectors.is_empty()
    }

    /// Grid spacing `2πL / N`.
    pub fn spacing(&self) -> f64 {
        TWO_PI * self.box_scale / self.points as f64
    }

    /// Volume of the periodic box, `(2πL)^d`.
    pub fn volume(&self) -> f64 {
        (TWO_PI * self.box_scale).powi(self.dim as i32)
    }

    /// Wavevector ξ of flat mode index `idx` (unused axes are zero).
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.wavevectors[idx]
    }

    /// Integer wavenumbers `ξ·L` of flat mode index `idx`.
    pub fn wavenumber(&self, idx: usize) -> [i64; 3] {
        self.wavenumbers[idx]
    }

    /// Euclidean norm |ξ|.
    pub fn xi_norm(&self, idx: usize) -> f64 {
        let k = self.wavevectors[idx];
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }

    /// Smallest nonzero |ξ| on the grid.
    pub fn xi_min(&self) -> f64 {
        1.0 / self.box_scale
    }

    /// Largest |ξ| on the grid.
    pub fn xi_max(&self) -> f64 {
        (self.dim as f64).sqrt() * (self.points / 2) as f64 / self.box_scale
    }

    /// Flat mode index of the integer wavevector `k` (components beyond `d` ignored).
    pub fn mode_index(&self, k: [i64; 3]) -> Result<usize> {
        let n = self.points as i64;
        let mut idx = 0usize;
        for (axis, &ka) in k.iter().enumerate().take(self.dim) {
            if ka <= -n / 2 || ka > n / 2 {
                return Err(Error::invalid(format!(
                    "wavenumber {ka} on axis {axis} not resolved by N = {n}"
                )));
            }
            let i = if ka < 0 { ka + n } else { ka } as usize;
            idx = idx * self.points + i;
        }
        Ok(idx)
    }

    /// Physical coordinate of flat point index `idx`.
    pub fn coordinate(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rest = idx;
        let h = self.spacing();
        for axis in (0..self.dim).rev() {
            x[axis] = (rest % self.points) as f64 * h;
            rest /= self.points;
        }
        x
    }

    /// Forward transform of `ncomp` component-slowest physical sample blocks.
    pub fn forward(self: &Arc<Self>, samples: &[f64], ncomp: usize) -> Result<SpectralField> {
        if samples.len() != ncomp * self.len() {
            return Err(Error::invalid(format!(
                "expected {} samples ({} components), got {}",
                ncomp * self.len(),
                ncomp,
                samples.len()
            )));
        }
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let scale = 1.0 / self.len() as f64;
        for block in data.chunks_mut(self.len()) {
            self.transform_block(block, true);
            for c in block.iter_mut() {
                *c *= scale;
            }
        }
        Ok(SpectralField {
            grid: Arc::clone(self),
            ncomp,
            data,
        })
    }

    /// Inverse transform returning real physical samples, component-slowest.
    pub fn inverse(&self, field: &SpectralField) -> Vec<f64> {
        let mut buf = field.data.clone();
        for block in buf.chunks_mut(self.len()) {
            self.transform_block(block, false);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Unnormalised d-dimensional FFT of one component block, axis by axis.
    fn transform_block(&self, block: &mut [Complex64], forward: bool) {
        let n = self.points;
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = block.len() / (n * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = block[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        block[base + i * stride] = *v;
                    }
                }
            }
        }
    }
}

fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Fourier coefficients of an `ncomp`-component real field on a [`Grid`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    ncomp: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, ncomp: usize) -> Self {
        SpectralField {
            grid: Arc::clone(grid),
            ncomp,
            data: vec![Complex64::new(0.0, 0.0); ncomp * grid.len()],
        }
    }

    /// Samples `f(component, x)` on the grid and transforms.
    pub fn from_fn(grid: &Arc<Grid>, ncomp: usize, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        let len = grid.len();
        let mut samples = Vec::with_capacity(ncomp * len);
        for c in 0..ncomp {
            for idx in 0..len {
                samples.push(f(c, grid.coordinate(idx)));
            }
        }
        grid.forward(&samples, ncomp).expect("sizes agree by construction")
    }

    /// Wraps raw coefficients (component-slowest).
    pub fn from_coefficients(grid: &Arc<Grid>, ncomp: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != ncomp * grid.len() {
            return Err(Error::invalid("coefficient array does not match the grid"));
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            ncomp,
            data,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    /// Physical samples (component-slowest).
    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.inverse(self)
    }

    /// Extracts components `range` as a new field.
    pub fn components(&self, range: std::ops::Range<usize>) -> SpectralField {
        let len = self.grid.len();
        SpectralField {
            grid: Arc::clone(&self.grid),
            ncomp: range.len(),
            data: self.data[range.start * len..range.end * len].to_vec(),
        }
    }

    /// Concatenates the components of `self` and `other`.
    pub fn stack(&self, other: &SpectralField) -> SpectralField {
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SpectralField {
            grid: Arc::clone(&self.grid),
            ncomp: self.ncomp + other.ncomp,
            data,
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert_eq!(self.data.len(), other.data.len(), "field shapes differ");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += y * a;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Mean value of component `c` (the zero mode).
    pub fn mean(&self, c: usize) -> f64 {
        self.comp(c)[0].re
    }

    /// Copy with the zero mode of every component removed.
    pub fn mean_free(&self) -> SpectralField {
        let mut out = self.clone();
        for c in 0..self.ncomp {
            out.comp_mut(c)[0] = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// Box L² norm over all components, `(2πL)^d Σ|c_k|²` under the square root.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.data.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Spectral derivative `∂/∂x_axis` of every component. The Nyquist mode along
    /// `axis` is dropped so real fields stay real.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        assert!(axis < self.grid.dim, "axis {axis} out of range");
        let len = self.grid.len();
        let nyq = (self.grid.points / 2) as i64;
        let mut out = self.clone();
        for (i, c) in out.data.iter_mut().enumerate() {
            let idx = i % len;
            if self.grid.wavenumbers[idx][axis] == nyq {
                *c = Complex64::new(0.0, 0.0);
            } else {
                let xi = self.grid.wavevectors[idx][axis];
                *c *= Complex64::new(0.0, xi);
            }
        }
        out
    }

    /// Two-thirds rule: zero every mode with some `|k_i L| > N/3`.
    pub fn dealias(&self) -> SpectralField {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let len = self.grid.len();
        let cut = self.grid.points as f64 / 3.0;
        let dim = self.grid.dim;
        let wn = &self.grid.wavenumbers;
        for (i, c) in self.data.iter_mut().enumerate() {
            let k = wn[i % len];
            if k.iter().take(dim).any(|&ka| (ka.abs() as f64) > cut) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Pseudospectral pointwise map: inverse transform, apply `f` to the vector of
    /// component values at each point, forward transform, dealias.
    pub fn map_pointwise(&self, out_ncomp: usize, f: impl Fn(&[f64], &mut [f64])) -> SpectralField {
        let len = self.grid.len();
        let phys = self.to_physical();
        let mut input = vec![0.0; self.ncomp];
        let mut output = vec![0.0; out_ncomp];
        let mut out_phys = vec![0.0; out_ncomp * len];
        for p in 0..len {
            for c in 0..self.ncomp {
                input[c] = phys[c * len + p];
            }
            f(&input, &mut output);
            for c in 0..out_ncomp {
                out_phys[c * len + p] = output[c];
            }
        }
        let mut out = self
            .grid
            .forward(&out_phys, out_ncomp)
            .expect("sizes agree by construction");
        out.dealias_in_place();
        out
    }

    /// Largest deviation from conjugate symmetry `c_{-k} = conj(c_k)` over
    /// modes strictly inside the Nyquist box.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let len = self.grid.len();
        let nyq = (self.grid.points / 2) as i64;
        let dim = self.grid.dim;
        let mut worst: f64 = 0.0;
        for idx in 0..len {
            let k = self.grid.wavenumbers[idx];
            if k.iter().take(dim).any(|&ka| ka == nyq) {
                continue;
            }
            let neg = self
                .grid
                .mode_index([-k[0], -k[1], -k[2]])
                .expect("negated interior wavenumber is resolved");
            for c in 0..self.ncomp {
                let a = self.comp(c)[idx];
                let b = self.comp(c)[neg].conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}

/// Header of the binary snapshot format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub dim: u64,
    pub components: u64,
    pub points: u64,
    pub box_scale: f64,
    pub time: f64,
    pub eps: f64,
}

/// `b"JXSNAPSH"` read as a little-endian u64.
pub const SNAPSHOT_MAGIC: u64 = u64::from_le_bytes(*b"JXSNAPSH");
pub const SNAPSHOT_VERSION: u64 = 1;
const HEADER_WORDS: usize = 8;

/// Writes a snapshot: eight little-endian 64-bit header words
/// (magic, version, d, n, N, L, t, ε) followed by physical samples as
/// little-endian f64, row-major, component-slowest.
pub fn write_snapshot(path: &Path, header: &SnapshotHeader, samples: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for word in [
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        header.dim,
        header.components,
        header.points,
        header.box_scale.to_bits(),
        header.time.to_bits(),
        header.eps.to_bits(),
    ] {
        w.write_all(&word.to_le_bytes())?;
    }
    for &x in samples {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_WORDS * 8 || bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("{}: truncated snapshot", path.display())));
    }
    let words: Vec<u64> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if words[0] != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    if words[1] != SNAPSHOT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {}",
            path.display(),
            words[1]
        )));
    }
    let header = SnapshotHeader {
        dim: words[2],
        components: words[3],
        points: words[4],
        box_scale: f64::from_bits(words[5]),
        time: f64::from_bits(words[6]),
        eps: f64::from_bits(words[7]),
    };
    let per_comp = (header.points as usize)
        .checked_pow(header.dim as u32)
        .ok_or_else(|| Error::Format("grid size overflows".into()))?;
    let samples: Vec<f64> = words[HEADER_WORDS..].iter().map(|&w| f64::from_bits(w)).collect();
    if per_comp == 0 || samples.len() % per_comp != 0 {
        return Err(Error::Format(format!(
            "{}: sample count {} is not a multiple of N^d = {}",
            path.display(),
            samples.len(),
            per_comp
        )));
    }
    Ok((header, samples))
}
