//! Modulation spaces: the short-time Fourier transform, the smooth partition of
//! unity σ_k on unit cubes, the band operators □_k = F⁻¹σ_kF, and the
//! M^{p,q}_s norm computed both from the STFT and from the band decomposition.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{config, domain, Result};
use crate::grid::{dft_in_place, forward_fourier, lp_norm_unchecked, Domain, Field, GridSpec, MAX_DIM};

/// Gaussian window `e^{-π|x|²/a²}`, normalised to unit discrete L² norm on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSpec {
    width: f64,
}

impl WindowSpec {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return domain(format!("window width must be positive, got {width}"));
        }
        Ok(Self { width })
    }

    /// `e^{-π|x|²}`; fixed by the Fourier transform.
    pub fn standard() -> Self {
        Self { width: 1.0 }
    }

    /// `e^{-|x|²/2}`, the harmonic-oscillator ground state. With this window the
    /// STFT magnitude is carried along by the oscillator flow as a rotation of
    /// phase space, so M^{p,p} norms are preserved exactly in the continuum.
    pub fn oscillator_ground() -> Self {
        Self {
            width: (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Unit-norm samples on `grid`, centred at the origin.
    pub fn sample(&self, grid: &GridSpec) -> Field {
        let a2 = self.width * self.width;
        let g = Field::from_fn(*grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-std::f64::consts::PI * r2 / a2).exp(), 0.0)
        });
        let nrm = g.norm_l2();
        g.scale(Complex64::new(1.0 / nrm, 0.0))
    }
}

/// Exponents `(p, q)` and weight `s` of M^{p,q}_s. `f64::INFINITY` is allowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl NormParams {
    pub fn new(p: f64, q: f64, s: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if v.is_nan() || v < 1.0 {
                return domain(format!("{name} must lie in [1, ∞], got {v}"));
            }
        }
        if !(s.is_finite() && s >= 0.0) {
            return domain(format!("weight exponent s must be finite and >= 0, got {s}"));
        }
        Ok(Self { p, q, s })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    Stft,
    Decomp,
}

impl std::str::FromStr for NormMethod {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stft" => Ok(Self::Stft),
            "decomp" => Ok(Self::Decomp),
            other => config(format!("unknown norm method '{other}' (expected stft or decomp)")),
        }
    }
}

impl NormMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Stft => "stft",
            Self::Decomp => "decomp",
        }
    }
}

fn japanese(w: &[f64; MAX_DIM]) -> f64 {
    (1.0 + w.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

fn check_grid(f: &Field, g: &GridSpec) -> Result<()> {
    if f.grid() != g {
        return config("field and operator live on different grids");
    }
    if f.domain() != Domain::Space {
        return config("expected a spatial field");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// STFT

/// Index of `t - x_a` on the periodic grid, per axis.
fn shifted_index(grid: &GridSpec, j: usize, a: usize) -> usize {
    let n = grid.n();
    let (mj, ma) = (grid.multi_index(j), grid.multi_index(a));
    let mut out = [0usize; MAX_DIM];
    for ax in 0..grid.d() {
        out[ax] = (mj[ax] + n + n / 2 - ma[ax]) % n;
    }
    grid.flat_index(&out)
}

/// `f · conj(T_{x_a} g)` sampled on the grid.
fn windowed(f: &Field, g: &Field, a: usize) -> Vec<Complex64> {
    let grid = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(j, &v)| v * g.values()[shifted_index(grid, j, a)].conj())
        .collect()
}

/// `V_g f(x_a, w_c)` for spatial index `a` and centered frequency index `c`.
pub fn stft(f: &Field, g: &WindowSpec, a: usize, c: usize) -> Result<Complex64> {
    let grid = *f.grid();
    if f.domain() != Domain::Space {
        return config("stft expects a spatial field");
    }
    if a >= grid.len() || c >= grid.len() {
        return domain("lattice index out of range");
    }
    let gs = g.sample(&grid);
    let w = grid.centered_frequency(c);
    let h = windowed(f, &gs, a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in h.iter().enumerate() {
        let x = grid.point(j);
        let phase: f64 = (0..grid.d()).map(|ax| x[ax] * w[ax]).sum();
        acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
    }
    Ok(acc * grid.cell_volume())
}

/// Full STFT table, row `a` (translation) holding the centered spectrum.
pub fn stft_matrix(f: &Field, g: &WindowSpec) -> Result<Vec<Vec<Complex64>>> {
    let grid = *f.grid();
    if f.domain() != Domain::Space {
        return config("stft expects a spatial field");
    }
    let gs = g.sample(&grid);
    (0..grid.len())
        .into_par_iter()
        .map(|a| {
            let h = Field::from_raw(grid, Domain::Space, windowed(f, &gs, a));
            forward_fourier(&h).map(Field::into_values)
        })
        .collect()
}

const STFT_CHUNK: usize = 64;

/// M^{p,q}_s norm from the STFT mixed norm on the lattice.
pub fn mod_norm_stft(f: &Field, params: &NormParams, g: &WindowSpec) -> Result<f64> {
    let grid = *f.grid();
    if f.domain() != Domain::Space {
        return config("mod_norm_stft expects a spatial field");
    }
    let gs = g.sample(&grid);
    let len = grid.len();
    let cell = grid.cell_volume();
    let p = params.p;
    // |V(x_a, w)| for one translation, in FFT order over w
    let row = |a: usize| -> Vec<f64> {
        let mut h = windowed(f, &gs, a);
        dft_in_place(&grid, &mut h, false);
        h.iter().map(|z| z.norm() * cell).collect()
    };
    // inner[w] accumulates Σ_x |V|^p (or the max); chunks keep the sum order fixed
    let mut inner = vec![0.0f64; len];
    let starts: Vec<usize> = (0..len).step_by(STFT_CHUNK).collect();
    for s in starts {
        let rows: Vec<Vec<f64>> = (s..(s + STFT_CHUNK).min(len)).into_par_iter().map(row).collect();
        for r in rows {
            for (acc, v) in inner.iter_mut().zip(r) {
                if p.is_infinite() {
                    *acc = acc.max(v);
                } else if p == 2.0 {
                    *acc += v * v;
                } else if p == 1.0 {
                    *acc += v;
                } else {
                    *acc += v.powf(p);
                }
            }
        }
    }
    let inner: Vec<f64> = if p.is_infinite() {
        inner
    } else {
        inner.iter().map(|v| (v * cell).powf(1.0 / p)).collect()
    };
    let weights: Vec<f64> = (0..len)
        .map(|i| japanese(&grid.fft_frequency(i)).powf(params.s))
        .collect();
    Ok(outer_norm(&inner, &weights, params.q, grid.freq_cell_volume()))
}

/// `(Σ (v_i w_i)^q · cell)^{1/q}`, or the max for `q = ∞`.
fn outer_norm(values: &[f64], weights: &[f64], q: f64, cell: f64) -> f64 {
    let terms: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let m = terms.iter().copied().fold(0.0, f64::max);
    if q.is_infinite() || m == 0.0 {
        return m;
    }
    let s: f64 = terms.iter().map(|t| (t / m).powf(q)).sum();
    m * (s * cell).powf(1.0 / q)
}

// ---------------------------------------------------------------------------
// Partition of unity

fn transition(u: f64) -> f64 {
    let psi = |v: f64| if v > 0.0 { (-1.0 / v).exp() } else { 0.0 };
    let (a, b) = (psi(u), psi(1.0 - u));
    a / (a + b)
}

/// One-dimensional bump: 1 on [0, 1/2], 0 on [1, ∞), smooth in between.
pub fn bump_profile(r: f64) -> f64 {
    transition(2.0 * (1.0 - r.abs()))
}

/// Tensor bump `ρ(ξ) = Π_j θ(|ξ_j|)`.
pub fn rho(xi: &[f64]) -> f64 {
    xi.iter().map(|&v| bump_profile(v)).product()
}

/// The σ_k family on a grid's frequency lattice for `|k|_∞ ≤ radius`.
///
/// Because ρ is a tensor product and the retained k form a cube, the
/// normalising sum Σ_l ρ_l factors per axis and so does σ_k; only the 1-D
/// factors are stored.
#[derive(Clone, Debug)]
pub struct DecompositionSpec {
    grid: GridSpec,
    radius: i64,
    // sigma1d[k + radius][p] for FFT-order position p along one axis
    sigma1d: Vec<Vec<f64>>,
}

/// Minimum lattice radius a grid must support.
pub const MIN_RADIUS: i64 = 3;

pub fn build_partition(grid: &GridSpec) -> Result<DecompositionSpec> {
    let fmax = grid.max_frequency();
    let radius = (fmax - 1e-12).ceil() as i64;
    if radius < MIN_RADIUS {
        return config(format!(
            "grid frequency range ±{fmax} supports lattice radius {radius}, need at least {MIN_RADIUS}"
        ));
    }
    let n = grid.n();
    let freqs: Vec<f64> = (0..n).map(|p| grid.fft_mode(p) as f64 * grid.dxi()).collect();
    let rho1d: Vec<Vec<f64>> = (-radius..=radius)
        .map(|k| freqs.iter().map(|&w| bump_profile(w - k as f64)).collect())
        .collect();
    let total: Vec<f64> = (0..n).map(|p| rho1d.iter().map(|r| r[p]).sum()).collect();
    let sigma1d = rho1d
        .into_iter()
        .map(|r| r.iter().zip(&total).map(|(a, t)| a / t).collect())
        .collect();
    Ok(DecompositionSpec {
        grid: *grid,
        radius,
        sigma1d,
    })
}

impl DecompositionSpec {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// All retained k in lexicographic order (unused axes zero).
    pub fn lattice(&self) -> Vec<[i64; MAX_DIM]> {
        let d = self.grid.d();
        let side = (2 * self.radius + 1) as usize;
        (0..side.pow(d as u32))
            .map(|mut i| {
                let mut k = [0i64; MAX_DIM];
                for ax in (0..d).rev() {
                    k[ax] = (i % side) as i64 - self.radius;
                    i /= side;
                }
                k
            })
            .collect()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() >= self.grid.d() && k.iter().take(self.grid.d()).all(|v| v.abs() <= self.radius)
    }

    /// σ_k at the FFT-order flat index `idx`.
    pub fn sigma(&self, k: &[i64], idx: usize) -> f64 {
        let mi = self.grid.multi_index(idx);
        (0..self.grid.d())
            .map(|ax| self.sigma1d[(k[ax] + self.radius) as usize][mi[ax]])
            .product()
    }

    /// σ_k over the whole lattice in FFT order.
    pub fn multiplier(&self, k: &[i64]) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.sigma(k, i)).collect()
    }
}

fn check_k(k: &[i64], dec: &DecompositionSpec) -> Result<()> {
    if !dec.contains(k) {
        return domain(format!("lattice point {:?} outside radius {}", k, dec.radius()));
    }
    Ok(())
}

fn band_from_dft(fhat: &[Complex64], k: &[i64], dec: &DecompositionSpec) -> Vec<Complex64> {
    let grid = dec.grid();
    let norm = 1.0 / grid.len() as f64;
    let mut buf: Vec<Complex64> = fhat
        .iter()
        .enumerate()
        .map(|(i, v)| v * (dec.sigma(k, i) * norm))
        .collect();
    dft_in_place(grid, &mut buf, true);
    buf
}

/// `□_k f = F⁻¹ σ_k F f`.
pub fn box_op(k: &[i64], f: &Field, dec: &DecompositionSpec) -> Result<Field> {
    check_grid(f, dec.grid())?;
    check_k(k, dec)?;
    let mut fhat = f.values().to_vec();
    dft_in_place(dec.grid(), &mut fhat, false);
    Ok(Field::from_raw(*dec.grid(), Domain::Space, band_from_dft(&fhat, k, dec)))
}

/// Every band `□_k f` paired with its k, in lattice order.
pub fn decompose(f: &Field, dec: &DecompositionSpec) -> Result<Vec<([i64; MAX_DIM], Field)>> {
    check_grid(f, dec.grid())?;
    let mut fhat = f.values().to_vec();
    dft_in_place(dec.grid(), &mut fhat, false);
    Ok(dec
        .lattice()
        .into_par_iter()
        .map(|k| {
            let band = band_from_dft(&fhat, &k, dec);
            (k, Field::from_raw(*dec.grid(), Domain::Space, band))
        })
        .collect())
}

/// `(Σ_k ‖□_k f‖_{L^p}^q (1+|k|)^{sq})^{1/q}`.
pub fn mod_norm_decomp(f: &Field, params: &NormParams, dec: &DecompositionSpec) -> Result<f64> {
    check_grid(f, dec.grid())?;
    let mut fhat = f.values().to_vec();
    dft_in_place(dec.grid(), &mut fhat, false);
    let grid = *dec.grid();
    let lattice = dec.lattice();
    let norms: Vec<f64> = lattice
        .par_iter()
        .map(|k| {
            if params.p == 2.0 {
                // Parseval: ‖□_k f‖² = Σ |σ_k · DFT f|² · dx^d / n^d
                let s: f64 = fhat
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let sk = dec.sigma(k, i);
                        if sk == 0.0 {
                            0.0
                        } else {
                            (v * sk).norm_sqr()
                        }
                    })
                    .sum();
                (s * grid.cell_volume() / grid.len() as f64).sqrt()
            } else {
                let band = band_from_dft(&fhat, k, dec);
                lp_norm_unchecked(&band, grid.cell_volume(), params.p)
            }
        })
        .collect();
    let weights: Vec<f64> = lattice
        .iter()
        .map(|k| {
            let r = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            (1.0 + r).powf(params.s)
        })
        .collect();
    Ok(outer_norm(&norms, &weights, params.q, 1.0))
}

/// Norm by either method with the standard window.
pub fn mod_norm(f: &Field, params: &NormParams, method: NormMethod) -> Result<f64> {
    match method {
        NormMethod::Stft => mod_norm_stft(f, params, &WindowSpec::standard()),
        NormMethod::Decomp => mod_norm_decomp(f, params, &build_partition(f.grid())?),
    }
}

/// `‖f‖_{dst} / ‖f‖_{src}` for an embedding `M^{src} ↪ M^{dst}`.
pub fn embedding_check(f: &Field, src: &NormParams, dst: &NormParams) -> Result<f64> {
    if !(src.p <= dst.p && src.q <= dst.q && dst.s <= src.s) {
        return domain(format!(
            "embedding requires p1 <= p2, q1 <= q2, s2 <= s1; got {src:?} -> {dst:?}"
        ));
    }
    let g = WindowSpec::standard();
    let a = mod_norm_stft(f, src, &g)?;
    let b = mod_norm_stft(f, dst, &g)?;
    if a == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(b / a)
}
