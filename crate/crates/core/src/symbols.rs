//! Dispersion symbols and the unimodular propagators `U(t) = F⁻¹ e^{itΦ(ξ)} F`.
//!
//! Symbols are evaluated at `2πξ`, so `Φ(ξ) = |2πξ|^α` and the laplacian
//! symbol `|2πξ|²` is the Fourier multiplier of `-Δ` under the grid's
//! `e^{-2πi x·ξ}` convention.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::grid::{apply_multiplier, inverse_fourier, lp_norm, Domain, Field, GridSpec, MAX_DIM};
use crate::modspace::{build_partition, mod_norm, NormMethod, NormParams};

/// One monomial `c · z^β` of a polynomial symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolKind {
    Fractional { alpha: f64 },
    Laplacian,
    Polynomial { terms: Vec<Monomial> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSpec {
    kind: SymbolKind,
    m1: f64,
    m2: f64,
    lambda: f64,
}

impl SymbolSpec {
    pub fn fractional(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return domain(format!("fractional order must be positive, got {alpha}"));
        }
        Ok(Self {
            kind: SymbolKind::Fractional { alpha },
            m1: alpha,
            m2: alpha,
            lambda: 1.0,
        })
    }

    pub fn laplacian() -> Self {
        Self {
            kind: SymbolKind::Laplacian,
            m1: 2.0,
            m2: 2.0,
            lambda: 1.0,
        }
    }

    /// Real polynomial `P(z) = Σ c_β z^β`, evaluated at `z = 2πξ`.
    pub fn polynomial(terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return domain("polynomial symbol needs at least one term");
        }
        let dim = terms[0].powers.len();
        if dim == 0 || dim > MAX_DIM {
            return domain(format!("monomial dimension must be in 1..={MAX_DIM}"));
        }
        if terms.iter().any(|t| t.powers.len() != dim || !t.coeff.is_finite()) {
            return domain("monomials must share one dimension and have finite coefficients");
        }
        let order = terms
            .iter()
            .filter(|t| t.coeff != 0.0)
            .map(|t| t.powers.iter().sum::<u32>())
            .max()
            .unwrap_or(0);
        if order < 1 {
            return domain("polynomial symbol must have order >= 1");
        }
        let m = order as f64;
        Ok(Self {
            kind: SymbolKind::Polynomial { terms },
            m1: m,
            m2: m,
            lambda: m,
        })
    }

    pub fn from_kind(kind: SymbolKind) -> Result<Self> {
        match kind {
            SymbolKind::Fractional { alpha } => Self::fractional(alpha),
            SymbolKind::Laplacian => Ok(Self::laplacian()),
            SymbolKind::Polynomial { terms } => Self::polynomial(terms),
        }
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    /// Growth parameters `(m₁, m₂)`.
    pub fn growth(&self) -> (f64, f64) {
        (self.m1, self.m2)
    }

    pub fn homogeneity(&self) -> f64 {
        self.lambda
    }

    /// Dispersion order α used for Strichartz exponents (polynomial: its order).
    pub fn order(&self) -> f64 {
        match &self.kind {
            SymbolKind::Fractional { alpha } => *alpha,
            SymbolKind::Laplacian => 2.0,
            SymbolKind::Polynomial { .. } => self.lambda,
        }
    }

    /// Factor converting propagation time `t` here into the time `τ` of the
    /// growth bounds, which are stated for the multiplier `e^{iπτφ(|ξ|)}`:
    /// `t·φ(2π|ξ|) = πτ·φ(|ξ|)` for a homogeneous symbol of degree λ.
    pub fn bound_time_scale(&self) -> f64 {
        (2.0 * PI).powf(self.order()) / PI
    }

    pub fn label(&self) -> String {
        match &self.kind {
            SymbolKind::Fractional { alpha } => format!("fractional_{alpha}"),
            SymbolKind::Laplacian => "laplacian".into(),
            SymbolKind::Polynomial { .. } => format!("polynomial_{}", self.lambda),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if let SymbolKind::Polynomial { terms } = &self.kind {
            if terms[0].powers.len() != d {
                return config(format!(
                    "polynomial symbol is {}-dimensional but the grid has d = {d}",
                    terms[0].powers.len()
                ));
            }
        }
        Ok(())
    }

    /// `Φ(ξ)` at a frequency point (only the first `d` entries are read).
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            SymbolKind::Fractional { alpha } => {
                let r2: f64 = xi.iter().map(|v| (2.0 * PI * v).powi(2)).sum();
                r2.powf(alpha / 2.0)
            }
            SymbolKind::Laplacian => xi.iter().map(|v| (2.0 * PI * v).powi(2)).sum(),
            SymbolKind::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    t.coeff
                        * t.powers
                            .iter()
                            .zip(xi)
                            .map(|(&b, &v)| (2.0 * PI * v).powi(b as i32))
                            .product::<f64>()
                })
                .sum(),
        }
    }
}

/// Symbol samples on a grid, ready to be exponentiated for any `t`.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: GridSpec,
    phase: Vec<f64>,
}

impl Propagator {
    pub fn new(sym: &SymbolSpec, grid: &GridSpec) -> Result<Self> {
        sym.check_dim(grid.d())?;
        let d = grid.d();
        let phase: Vec<f64> = (0..grid.len())
            .map(|i| sym.eval(&grid.fft_frequency(i)[..d]))
            .collect();
        if phase.iter().any(|v| !v.is_finite()) {
            return domain("symbol is not finite on the frequency lattice");
        }
        Ok(Self { grid: *grid, phase })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Symbol values in FFT order.
    pub fn symbol_values(&self) -> &[f64] {
        &self.phase
    }

    /// `F⁻¹[e^{itΦ} f̂]`.
    pub fn apply(&self, f: &Field, t: f64) -> Field {
        debug_assert_eq!(f.grid(), &self.grid);
        let m: Vec<Complex64> = self.phase.iter().map(|&p| Complex64::from_polar(1.0, t * p)).collect();
        apply_multiplier(f, &m)
    }
}

pub fn propagate(f: &Field, sym: &SymbolSpec, t: f64) -> Result<Field> {
    if f.domain() != Domain::Space {
        return config("propagate expects a spatial field");
    }
    Ok(Propagator::new(sym, f.grid())?.apply(f, t))
}

/// One row of a growth probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub symbol_id: String,
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct GrowthFit {
    pub slope: f64,
    pub rows: Vec<ProbeRow>,
}

/// Least-squares slope of `log r` against `log(1+t)` through the origin
/// (`r(0) = 1` pins the intercept).
pub fn fit_log_slope(ts: &[f64], rs: &[f64]) -> f64 {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&t, &r) in ts.iter().zip(rs) {
        let x = (1.0 + t.abs()).ln();
        sxy += x * r.ln();
        sxx += x * x;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `r(t) = max_f ‖U(t)f‖/‖f‖` over `family` in M^{p,q}_s, and its fitted
/// exponent against `log(1 + τ)` with `τ` the bound's time variable
/// (see [`SymbolSpec::bound_time_scale`]).
pub fn multiplier_growth_probe(
    sym: &SymbolSpec,
    params: &NormParams,
    t_list: &[f64],
    family: &[Field],
    method: NormMethod,
) -> Result<GrowthFit> {
    if family.is_empty() {
        return domain("growth probe needs a non-empty family");
    }
    let grid = *family[0].grid();
    let prop = Propagator::new(sym, &grid)?;
    let dec = build_partition(&grid)?;
    let norm = |f: &Field| -> Result<f64> {
        match method {
            NormMethod::Decomp => crate::modspace::mod_norm_decomp(f, params, &dec),
            NormMethod::Stft => mod_norm(f, params, NormMethod::Stft),
        }
    };
    let base: Vec<f64> = family.iter().map(norm).collect::<Result<_>>()?;
    let rows: Vec<ProbeRow> = t_list
        .iter()
        .map(|&t| -> Result<ProbeRow> {
            let ratios: Vec<f64> = family
                .par_iter()
                .zip(&base)
                .map(|(f, &b)| norm(&prop.apply(f, t)).map(|v| v / b))
                .collect::<Result<_>>()?;
            Ok(ProbeRow {
                symbol_id: sym.label(),
                p: params.p,
                q: params.q,
                t,
                ratio: ratios.into_iter().fold(0.0, f64::max),
            })
        })
        .collect::<Result<_>>()?;
    let scale = sym.bound_time_scale();
    let ts: Vec<f64> = rows.iter().map(|r| r.t * scale).collect();
    let rs: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(GrowthFit {
        slope: fit_log_slope(&ts, &rs),
        rows,
    })
}

/// The indefinite quadratic `P(ξ, η) = ξ² − η²` on a 2-D lattice.
pub fn saddle_symbol(xi: &[f64]) -> f64 {
    xi[0] * xi[0] - xi[1] * xi[1]
}

/// `‖F⁻¹(σ_k e^{itP})‖_{L¹}` on a 2-D grid.
pub fn kernel_l1_norm(grid: &GridSpec, k: [i64; 2], t: f64) -> Result<f64> {
    if grid.d() != 2 {
        return config("kernel diagnostic runs on a 2-D grid");
    }
    let dec = build_partition(grid)?;
    let kk = [k[0], k[1], 0];
    if !dec.contains(&kk) {
        return domain(format!("lattice point {k:?} outside the retained radius"));
    }
    let vals: Vec<Complex64> = (0..grid.len())
        .map(|c| {
            let w = grid.centered_frequency(c);
            let idx = grid.flat_index(&grid.multi_index(c).map(|v| (v + grid.n() / 2) % grid.n()));
            Complex64::from_polar(dec.sigma(&kk, idx), t * saddle_symbol(&w))
        })
        .collect();
    let spec = Field::with_domain(*grid, Domain::Frequency, vals)?;
    lp_norm(&inverse_fourier(&spec)?, 1.0)
}

#[derive(Clone, Debug)]
pub struct KernelFit {
    /// `max L¹(t) / max(t, 1)` over all samples.
    pub constant: f64,
    /// Log-log slope of the largest L¹ norm against t over t ≥ 1.
    pub slope: f64,
    /// `(k, t, L¹)` samples.
    pub samples: Vec<([i64; 2], f64, f64)>,
}

pub fn kernel_growth(grid: &GridSpec, ks: &[[i64; 2]], ts: &[f64]) -> Result<KernelFit> {
    let jobs: Vec<([i64; 2], f64)> = ks.iter().flat_map(|&k| ts.iter().map(move |&t| (k, t))).collect();
    let samples: Vec<([i64; 2], f64, f64)> = jobs
        .par_iter()
        .map(|&(k, t)| kernel_l1_norm(grid, k, t).map(|v| (k, t, v)))
        .collect::<Result<_>>()?;
    let constant = samples
        .iter()
        .map(|&(_, t, v)| v / t.abs().max(1.0))
        .fold(0.0, f64::max);
    // slope of max_k L¹ against t, for t ≥ 1, with free intercept
    let mut pts = Vec::new();
    for &t in ts.iter().filter(|t| **t >= 1.0) {
        let m = samples
            .iter()
            .filter(|s| s.1 == t)
            .map(|s| s.2)
            .fold(0.0, f64::max);
        pts.push((t.ln(), m.ln()));
    }
    let slope = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(KernelFit {
        constant,
        slope,
        samples,
    })
}
