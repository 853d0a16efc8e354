//! Truncated periodic grids approximating R^d, the continuous Fourier transform
//! realised through the DFT, and Riemann-sum Lebesgue norms.
//!
//! Fourier convention: `f̂(w) = ∫ f(t) e^{-2πi t·w} dt`. On a grid covering
//! `[-L, L)^d` with `n` points per axis the spatial step is `dx = 2L/n` and
//! the frequency step is `dξ = 1/(2L)`; the frequency lattice is
//! `{m·dξ : m ∈ [-n/2, n/2)^d}`.
//!
//! Spectral [`Field`]s returned by [`forward_fourier`] are stored in centered
//! order: flat index `c` along each axis corresponds to `m = c - n/2`. The
//! library internally works on raw DFT arrays in FFT order and only reorders at
//! this public boundary.

use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{config, domain, Result};

/// Largest spatial dimension the grid supports.
pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    d: usize,
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(d: usize, n_per_dim: usize, half_width: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return config(format!("grid dimension must be in 1..={MAX_DIM}, got {d}"));
        }
        if n_per_dim < 8 || !n_per_dim.is_power_of_two() {
            return config(format!(
                "samples per dimension must be a power of two >= 8, got {n_per_dim}"
            ));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return config(format!("half width must be positive and finite, got {half_width}"));
        }
        Ok(Self {
            d,
            n: n_per_dim,
            half_width,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        1.0 / (2.0 * self.half_width)
    }

    /// Quadrature weight of one spatial cell, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Quadrature weight of one frequency cell, `dξ^d`.
    pub fn freq_cell_volume(&self) -> f64 {
        self.dxi().powi(self.d as i32)
    }

    /// `n/2 · dξ`, the magnitude of the most negative lattice frequency per axis.
    pub fn max_frequency(&self) -> f64 {
        (self.n / 2) as f64 * self.dxi()
    }

    /// The grid on which the centered spectrum of a field on `self` lives when
    /// read as a spatial function: same `n`, step `dξ`.
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            d: self.d,
            n: self.n,
            half_width: self.max_frequency(),
        }
    }

    /// Coordinate of sample `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Split a flat index into per-axis indices (last axis fastest).
    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        for a in (0..self.d).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        mi.iter()
            .take(self.d)
            .fold(0usize, |acc, &i| acc * self.n + (i % self.n))
    }

    /// Spatial position of a flat index; unused axes are zero.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.d {
            x[a] = self.coord(mi[a]);
        }
        x
    }

    /// Signed integer frequency index of FFT-order position `p` along one axis.
    pub fn fft_mode(&self, p: usize) -> i64 {
        let n = self.n as i64;
        let p = p as i64;
        if p < n / 2 {
            p
        } else {
            p - n
        }
    }

    /// Lattice frequency of a flat index in FFT order.
    pub fn fft_frequency(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let mut w = [0.0; MAX_DIM];
        for a in 0..self.d {
            w[a] = self.fft_mode(mi[a]) as f64 * self.dxi();
        }
        w
    }

    /// Lattice frequency of a flat index in centered order.
    pub fn centered_frequency(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let mut w = [0.0; MAX_DIM];
        for a in 0..self.d {
            w[a] = (mi[a] as i64 - (self.n / 2) as i64) as f64 * self.dxi();
        }
        w
    }

    /// Frequencies of every lattice point in FFT order.
    pub fn fft_frequencies(&self) -> Vec<[f64; MAX_DIM]> {
        (0..self.len()).map(|i| self.fft_frequency(i)).collect()
    }

    /// Map from FFT-order flat index to centered flat index.
    pub(crate) fn fft_to_centered(&self, idx: usize) -> usize {
        let mut mi = self.multi_index(idx);
        for v in mi.iter_mut().take(self.d) {
            *v = (*v + self.n / 2) % self.n;
        }
        self.flat_index(&mi)
    }
}

/// Whether a field holds spatial samples or samples on the frequency lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Space,
    Frequency,
}

/// Complex samples on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    domain: Domain,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        Self::with_domain(grid, Domain::Space, values)
    }

    pub fn with_domain(grid: GridSpec, domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return config(format!(
                "field has {} samples but grid expects {}",
                values.len(),
                grid.len()
            ));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return crate::error::domain("field samples must be finite");
        }
        Ok(Self {
            grid,
            domain,
            values,
        })
    }

    /// Build without validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(grid: GridSpec, domain: Domain, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            domain,
            values,
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, Domain::Space, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    /// Sample `f` at every spatial grid point. `f` receives a slice of length `d`.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = grid.d();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..d])
            })
            .collect();
        Self::from_raw(grid, Domain::Space, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Quadrature weight appropriate for the field's domain.
    pub fn cell_volume(&self) -> f64 {
        match self.domain {
            Domain::Space => self.grid.cell_volume(),
            Domain::Frequency => self.grid.freq_cell_volume(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::from_raw(self.grid, self.domain, self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Field {
        Field::from_raw(
            self.grid,
            self.domain,
            self.values.iter().enumerate().map(|(i, &z)| f(i, z)).collect(),
        )
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field::from_raw(
            self.grid,
            self.domain,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn conj(&self) -> Field {
        self.map(|z| z.conj())
    }

    /// `⟨self, other⟩ = ∫ self · conj(other)`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s * self.cell_volume()).sqrt()
    }

    /// `‖self − other‖_{L²}`.
    pub fn distance_l2(&self, other: &Field) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Reinterpret a centered spectrum as a spatial function on the dual grid.
    pub fn spectrum_as_spatial(&self) -> Result<Field> {
        if self.domain != Domain::Frequency {
            return config("spectrum_as_spatial expects a frequency-domain field");
        }
        Ok(Field::from_raw(self.grid.dual(), Domain::Space, self.values.clone()))
    }
}

fn check_same(a: &Field, b: &Field) {
    assert_eq!(a.grid, b.grid, "fields live on different grids");
    assert_eq!(a.domain, b.domain, "fields live in different domains");
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        check_same(self, rhs);
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        check_same(self, rhs);
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Pointwise product.
impl Mul for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        check_same(self, rhs);
        self.zip_map(rhs, |a, b| a * b)
    }
}

// ---------------------------------------------------------------------------
// FFT plumbing

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

/// Unnormalised d-dimensional DFT in place (FFT order in and out).
pub(crate) fn dft_in_place(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let d = grid.d();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis: contiguous lines
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for a in (0..d.saturating_sub(1)).rev() {
        let stride = n.pow((d - 1 - a) as u32);
        let outer = n.pow(a as u32);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Apply a Fourier multiplier given in FFT order: `F^{-1}[m · F f]`.
pub(crate) fn apply_multiplier(f: &Field, multiplier: &[Complex64]) -> Field {
    let grid = *f.grid();
    debug_assert_eq!(multiplier.len(), grid.len());
    let mut buf = f.values().to_vec();
    dft_in_place(&grid, &mut buf, false);
    let norm = 1.0 / grid.len() as f64;
    for (v, m) in buf.iter_mut().zip(multiplier) {
        *v *= m * norm;
    }
    dft_in_place(&grid, &mut buf, true);
    Field::from_raw(grid, f.domain(), buf)
}

/// Same as [`apply_multiplier`] for a real multiplier.
pub(crate) fn apply_real_multiplier(f: &Field, multiplier: &[f64]) -> Field {
    let grid = *f.grid();
    let mut buf = f.values().to_vec();
    dft_in_place(&grid, &mut buf, false);
    let norm = 1.0 / grid.len() as f64;
    for (v, m) in buf.iter_mut().zip(multiplier) {
        *v *= m * norm;
    }
    dft_in_place(&grid, &mut buf, true);
    Field::from_raw(grid, f.domain(), buf)
}

fn parity_sign(grid: &GridSpec, fft_idx: usize) -> f64 {
    let mi = grid.multi_index(fft_idx);
    let s: usize = mi.iter().take(grid.d()).sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Continuous Fourier transform sampled on the frequency lattice, centered order.
pub fn forward_fourier(f: &Field) -> Result<Field> {
    if f.domain() != Domain::Space {
        return config("forward_fourier expects a spatial field");
    }
    let grid = *f.grid();
    let mut buf = f.values().to_vec();
    dft_in_place(&grid, &mut buf, false);
    let w = grid.cell_volume();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (p, v) in buf.into_iter().enumerate() {
        // x_j·ξ_m = -m/2 + jm/n per axis, so the offset contributes (-1)^m.
        out[grid.fft_to_centered(p)] = v * (parity_sign(&grid, p) * w);
    }
    Ok(Field::from_raw(grid, Domain::Frequency, out))
}

/// Inverse of [`forward_fourier`].
pub fn inverse_fourier(fhat: &Field) -> Result<Field> {
    if fhat.domain() != Domain::Frequency {
        return config("inverse_fourier expects a frequency-domain field");
    }
    let grid = *fhat.grid();
    let w = grid.freq_cell_volume();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (p, v) in buf.iter_mut().enumerate() {
        *v = fhat.values()[grid.fft_to_centered(p)] * (parity_sign(&grid, p) * w);
    }
    dft_in_place(&grid, &mut buf, true);
    Ok(Field::from_raw(grid, Domain::Space, buf))
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the sample maximum.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return domain(format!("Lebesgue exponent must be >= 1, got {p}"));
    }
    Ok(lp_norm_unchecked(f.values(), f.cell_volume(), p))
}

pub(crate) fn lp_norm_unchecked(values: &[Complex64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    if p == 2.0 {
        let s: f64 = values.iter().map(|z| z.norm_sqr()).sum();
        return (s * cell).sqrt();
    }
    if p == 1.0 {
        let s: f64 = values.iter().map(|z| z.norm()).sum();
        return s * cell;
    }
    // scale by the maximum to avoid overflow for large p
    let m = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|z| (z.norm() / m).powf(p)).sum();
    m * (s * cell).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 6, 1.0).is_err());
        assert!(GridSpec::new(1, 4, 1.0).is_err());
        assert!(GridSpec::new(0, 16, 1.0).is_err());
        assert!(GridSpec::new(1, 16, 0.0).is_err());
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        assert_eq!(g.dx() * g.n() as f64, 6.0);
    }

    #[test]
    fn frequency_lattice_is_symmetric_range() {
        let g = GridSpec::new(1, 16, 2.0).unwrap();
        let modes: Vec<i64> = (0..16).map(|p| g.fft_mode(p)).collect();
        assert_eq!(*modes.iter().min().unwrap(), -8);
        assert_eq!(*modes.iter().max().unwrap(), 7);
        assert_eq!(g.centered_frequency(0)[0], -8.0 * g.dxi());
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = GridSpec::new(1, 256, 8.0).unwrap();
        let f = Field::from_fn(g, |x| c((-PI * x[0] * x[0]).exp()));
        let fh = forward_fourier(&f).unwrap();
        let err = (0..g.len())
            .map(|i| {
                let w = g.centered_frequency(i)[0];
                (fh.values()[i] - c((-PI * w * w).exp())).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn scaled_impulse_has_flat_spectrum() {
        let g = GridSpec::new(1, 64, 4.0).unwrap();
        let mut v = vec![c(0.0); 64];
        v[32] = c(1.0 / g.dx()); // x = 0
        let fh = forward_fourier(&Field::new(g, v).unwrap()).unwrap();
        for z in fh.values() {
            assert!((z - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_matches_direct_quadrature() {
        // oracle: direct Riemann sum of the defining integral
        let g = GridSpec::new(1, 128, 4.0).unwrap();
        let k0 = 1.25;
        let f = Field::from_fn(g, |x| {
            Complex64::from_polar((-0.5 * x[0] * x[0]).exp(), 2.0 * PI * k0 * x[0])
        });
        let fh = forward_fourier(&f).unwrap();
        for &m in &[-10i64, -3, 0, 10, 20] {
            let w = m as f64 * g.dxi();
            let direct: Complex64 = (0..g.len())
                .map(|j| {
                    let x = g.coord(j);
                    f.values()[j] * Complex64::from_polar(g.dx(), -2.0 * PI * x * w)
                })
                .sum();
            let c_idx = (m + 64) as usize;
            assert!((fh.values()[c_idx] - direct).norm() < 1e-8);
        }
        // the spectrum peaks at k0
        let peak = (0..g.len())
            .max_by(|&a, &b| fh.values()[a].norm().total_cmp(&fh.values()[b].norm()))
            .unwrap();
        assert!((g.centered_frequency(peak)[0] - k0).abs() < 1e-12);
    }

    #[test]
    fn lp_norms() {
        let g = GridSpec::new(1, 64, 1.0).unwrap();
        let one = Field::from_fn(g, |_| c(1.0));
        assert!((lp_norm(&one, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let g = GridSpec::new(1, 256, 8.0).unwrap();
        let gauss = Field::from_fn(g, |x| c((-PI * x[0] * x[0]).exp()));
        assert!((lp_norm(&gauss, 2.0).unwrap() - 2f64.powf(-0.25)).abs() < 1e-8);
        assert!((lp_norm(&gauss, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
        assert!(lp_norm(&gauss, 0.5).is_err());
    }

    #[test]
    fn two_dimensional_round_trip() {
        let g = GridSpec::new(2, 32, 4.0).unwrap();
        let f = Field::from_fn(g, |x| {
            Complex64::new((-x[0] * x[0] - 2.0 * x[1] * x[1]).exp(), x[0] * (-x[1] * x[1]).exp())
        });
        let back = inverse_fourier(&forward_fourier(&f).unwrap()).unwrap();
        assert!(back.distance_l2(&f) < 1e-12 * f.norm_l2());
        assert!(forward_fourier(&forward_fourier(&f).unwrap()).is_err());
    }
}
