//! Normalised Hermite functions, the spectral projections P_k of the harmonic
//! oscillator `H = -Δ + |x|²`, and its propagator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{config, domain, Error, Result};
use crate::grid::{apply_real_multiplier, Domain, Field, GridSpec};

/// Edge magnitude below which a Hermite function counts as decayed.
pub const EDGE_TOL: f64 = 1e-6;
/// Residual above which a transform is reported as truncated.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// `h_0(x), …, h_kmax(x)` by the normalised three-term recurrence, with
/// running rescaling so large |x| neither overflows nor underflows early.
pub fn hermite_values(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let mut raw = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        raw.push((cur, log_scale));
        let next = if k == 0 {
            2f64.sqrt() * x * cur
        } else {
            x * (2.0 / (k as f64 + 1.0)).sqrt() * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev
        };
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e100 {
            prev /= m;
            cur /= m;
            log_scale += m.ln();
        }
    }
    for (v, s) in raw {
        out.push(if v == 0.0 { 0.0 } else { v * s.exp() });
    }
    out
}

/// Hermite functions sampled on a grid up to total degree `K`.
#[derive(Clone, Debug)]
pub struct HermiteBasis {
    grid: GridSpec,
    max_degree: usize,
    // table[k * n + j] = h_k(x_j)
    table: Vec<f64>,
}

/// Default degree caps: 128 in one dimension, total degree 64 otherwise.
pub fn default_cap(d: usize) -> usize {
    if d == 1 {
        128
    } else {
        64
    }
}

/// Largest `K ≤ cap` whose functions have decayed below [`EDGE_TOL`] both at
/// the box edge and at the edge of the resolved frequency band.
pub fn resolvable_degree(grid: &GridSpec, cap: usize) -> usize {
    // h_k is its own Fourier transform up to the map ξ ↦ 2πξ
    let edge = grid.half_width().min(2.0 * PI * grid.max_frequency());
    let vals = hermite_values(edge, cap);
    let mut k = 0;
    while k < cap && vals[k + 1].abs() <= EDGE_TOL {
        k += 1;
    }
    if vals[0].abs() > EDGE_TOL {
        return 0;
    }
    k
}

impl HermiteBasis {
    /// Basis with the largest degree the grid resolves, capped by [`default_cap`].
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let k = resolvable_degree(grid, default_cap(grid.d()));
        if k < 4 {
            return config(format!(
                "grid (L = {}, n = {}) resolves only Hermite degree {k}",
                grid.half_width(),
                grid.n()
            ));
        }
        Ok(Self::build(grid, k))
    }

    /// Basis of fixed total degree; fails if the grid cannot resolve it.
    pub fn with_max_degree(grid: &GridSpec, max_degree: usize) -> Result<Self> {
        let k = resolvable_degree(grid, max_degree);
        if k < max_degree {
            return config(format!(
                "grid (L = {}, n = {}) resolves Hermite degree {k} < requested {max_degree}",
                grid.half_width(),
                grid.n()
            ));
        }
        Ok(Self::build(grid, max_degree))
    }

    fn build(grid: &GridSpec, k: usize) -> Self {
        let n = grid.n();
        let mut table = vec![0.0; (k + 1) * n];
        for j in 0..n {
            for (deg, v) in hermite_values(grid.coord(j), k).into_iter().enumerate() {
                table[deg * n + j] = v;
            }
        }
        Self {
            grid: *grid,
            max_degree: k,
            table,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of coefficient slots per axis, `K + 1`.
    fn side(&self) -> usize {
        self.max_degree + 1
    }

    /// All multi-indices with `|α| ≤ K`, in row-major order of the coefficient tensor.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        let d = self.grid.d();
        let side = self.side();
        (0..side.pow(d as u32))
            .map(|i| self.tensor_index(i))
            .filter(|a| a.iter().sum::<usize>() <= self.max_degree)
            .collect::<Vec<_>>()
            .into_iter()
            .map(|a| a[..d].to_vec())
            .collect()
    }

    fn tensor_index(&self, mut i: usize) -> [usize; 3] {
        let side = self.side();
        let mut a = [0usize; 3];
        for ax in (0..self.grid.d()).rev() {
            a[ax] = i % side;
            i /= side;
        }
        a
    }

    /// `Φ_α` sampled on the grid.
    pub fn basis_function(&self, alpha: &[usize]) -> Result<Field> {
        let d = self.grid.d();
        if alpha.len() != d || alpha.iter().sum::<usize>() > self.max_degree {
            return domain(format!("multi-index {alpha:?} outside the basis"));
        }
        let n = self.grid.n();
        let values = (0..self.grid.len())
            .map(|i| {
                let mi = self.grid.multi_index(i);
                let v: f64 = (0..d).map(|ax| self.table[alpha[ax] * n + mi[ax]]).product();
                Complex64::new(v, 0.0)
            })
            .collect();
        Ok(Field::from_raw(self.grid, Domain::Space, values))
    }

    /// Mode product along `axis`: `out[.., r, ..] = Σ_c m(r, c) · data[.., c, ..]`.
    fn mode_product(
        &self,
        data: &[Complex64],
        shape: &[usize],
        axis: usize,
        rows: usize,
        m: impl Fn(usize, usize) -> f64 + Sync,
    ) -> (Vec<Complex64>, Vec<usize>) {
        let cols = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut new_shape = shape.to_vec();
        new_shape[axis] = rows;
        let out: Vec<Complex64> = (0..outer * rows * inner)
            .into_par_iter()
            .map(|flat| {
                let o = flat / (rows * inner);
                let r = (flat / inner) % rows;
                let i = flat % inner;
                let base = o * cols * inner + i;
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..cols {
                    let w = m(r, c);
                    if w != 0.0 {
                        acc += data[base + c * inner] * w;
                    }
                }
                acc
            })
            .collect();
        (out, new_shape)
    }

    /// Coefficient tensor `⟨f, Φ_α⟩` with entries of degree above K zeroed.
    fn coefficients(&self, f: &Field) -> Vec<Complex64> {
        let d = self.grid.d();
        let n = self.grid.n();
        let side = self.side();
        let dx = self.grid.dx();
        let mut data = f.values().to_vec();
        let mut shape = vec![n; d];
        for ax in 0..d {
            let (next, sh) = self.mode_product(&data, &shape, ax, side, |r, c| self.table[r * n + c] * dx);
            data = next;
            shape = sh;
        }
        for (i, v) in data.iter_mut().enumerate() {
            if self.tensor_index(i).iter().sum::<usize>() > self.max_degree {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        data
    }

    fn synthesize(&self, coeffs: &[Complex64]) -> Field {
        let d = self.grid.d();
        let n = self.grid.n();
        let side = self.side();
        let mut data = coeffs.to_vec();
        let mut shape = vec![side; d];
        for ax in 0..d {
            let (next, sh) = self.mode_product(&data, &shape, ax, n, |r, c| self.table[c * n + r]);
            data = next;
            shape = sh;
        }
        Field::from_raw(self.grid, Domain::Space, data)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid() != &self.grid || f.domain() != Domain::Space {
            return config("field does not live on the basis grid");
        }
        Ok(())
    }
}

/// Coefficients of a field in a [`HermiteBasis`] plus the truncation residual.
#[derive(Clone, Debug)]
pub struct HermiteExpansion {
    d: usize,
    side: usize,
    max_degree: usize,
    coeffs: Vec<Complex64>,
    /// `‖f − Σ c_α Φ_α‖_{L²}`.
    pub residual: f64,
}

impl HermiteExpansion {
    pub fn coeff(&self, alpha: &[usize]) -> Complex64 {
        if alpha.len() != self.d || alpha.iter().sum::<usize>() > self.max_degree {
            return Complex64::new(0.0, 0.0);
        }
        let i = alpha.iter().fold(0, |acc, &a| acc * self.side + a);
        self.coeffs[i]
    }

    /// Raw coefficient tensor, `(K+1)^d` entries in row-major order.
    pub fn tensor(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `Σ_{|α|=k} |c_α|²`.
    pub fn shell_energy(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| degree_of(*i, self.side, self.d) == k)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }
}

fn degree_of(mut i: usize, side: usize, d: usize) -> usize {
    let mut s = 0;
    for _ in 0..d {
        s += i % side;
        i /= side;
    }
    s
}

pub fn hermite_transform(f: &Field, basis: &HermiteBasis) -> Result<HermiteExpansion> {
    basis.check(f)?;
    let coeffs = basis.coefficients(f);
    let rec = basis.synthesize(&coeffs);
    Ok(HermiteExpansion {
        d: basis.grid.d(),
        side: basis.side(),
        max_degree: basis.max_degree,
        coeffs,
        residual: rec.distance_l2(f),
    })
}

pub fn hermite_reconstruct(exp: &HermiteExpansion, basis: &HermiteBasis) -> Field {
    basis.synthesize(&exp.coeffs)
}

/// `P_k f = Σ_{|α| = k} ⟨f, Φ_α⟩ Φ_α`.
pub fn project(f: &Field, basis: &HermiteBasis, k: usize) -> Result<Field> {
    basis.check(f)?;
    let mut c = basis.coefficients(f);
    let (side, d) = (basis.side(), basis.grid.d());
    for (i, v) in c.iter_mut().enumerate() {
        if degree_of(i, side, d) != k {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    Ok(basis.synthesize(&c))
}

/// Which sign the phase `e^{∓it(2k+d)}` carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseSign {
    /// `e^{-itH}`: solves `i∂_tψ = Hψ`.
    Equation,
    /// `e^{+itH}`: the abstract multiplier `m(H)`.
    Abstract,
}

fn rotate(f: &Field, basis: &HermiteBasis, t: f64, sign: PhaseSign) -> (Field, f64) {
    let mut c = basis.coefficients(f);
    let low = basis.synthesize(&c);
    let rest = f - &low;
    let d = basis.grid.d();
    let sgn = match sign {
        PhaseSign::Equation => -1.0,
        PhaseSign::Abstract => 1.0,
    };
    for (i, v) in c.iter_mut().enumerate() {
        let k = degree_of(i, basis.side(), d);
        *v *= Complex64::from_polar(1.0, sgn * t * (2 * k + d) as f64);
    }
    // the unresolved remainder is carried unchanged, so the map stays unitary
    (&basis.synthesize(&c) + &rest, rest.norm_l2())
}

/// `e^{-itH} f`, failing if `f` is not resolved by the basis.
pub fn harmonic_propagate(f: &Field, basis: &HermiteBasis, t: f64) -> Result<Field> {
    harmonic_multiplier(f, basis, t, PhaseSign::Equation)
}

/// `e^{∓itH} f` with the chosen sign.
pub fn harmonic_multiplier(f: &Field, basis: &HermiteBasis, t: f64, sign: PhaseSign) -> Result<Field> {
    basis.check(f)?;
    let (out, residual) = rotate(f, basis, t, sign);
    if residual > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            residual,
            limit: TRUNCATION_LIMIT,
        });
    }
    Ok(out)
}

/// `e^{-itH} f` without the truncation check; used inside time stepping where
/// intermediate stages may carry tiny unresolved tails.
pub(crate) fn harmonic_propagate_unchecked(f: &Field, basis: &HermiteBasis, t: f64) -> Field {
    rotate(f, basis, t, PhaseSign::Equation).0
}

/// `Hf = -Δf + |x|² f`, with the laplacian applied spectrally.
pub fn apply_hamiltonian(f: &Field) -> Field {
    let grid = *f.grid();
    let d = grid.d();
    let sym: Vec<f64> = (0..grid.len())
        .map(|i| {
            grid.fft_frequency(i)[..d]
                .iter()
                .map(|w| (2.0 * PI * w).powi(2))
                .sum()
        })
        .collect();
    let kinetic = apply_real_multiplier(f, &sym);
    let pot = f.map_indexed(|i, v| {
        let x = grid.point(i);
        v * x[..d].iter().map(|u| u * u).sum::<f64>()
    });
    &kinetic + &pot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward_fourier;
    use proptest::prelude::*;

    fn grid16() -> GridSpec {
        GridSpec::new(1, 512, 16.0).unwrap()
    }

    fn schwartz(grid: GridSpec, seed: u64) -> Field {
        let s = seed as f64;
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let y = x[0] - 0.4 * s.sin();
            Complex64::from_polar((-0.6 * y * y - 0.3 * (r2 - x[0] * x[0])).exp(), 0.8 * s.cos() * x[0])
                + Complex64::new(0.3 * (-(x[0] + 1.0).powi(2)).exp(), 0.0)
        })
    }

    #[test]
    fn recurrence_matches_closed_forms() {
        for &x in &[-2.0, 0.0, 0.7, 3.1] {
            let h = hermite_values(x, 3);
            let h0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert!((h[0] - h0).abs() < 1e-15);
            assert!((h[1] - 2f64.sqrt() * x * h0).abs() < 1e-14);
            assert!((h[2] - (2.0 * x * x - 1.0) / 2f64.sqrt() * h0).abs() < 1e-14);
        }
        // far out, rescaling keeps high orders finite
        let far = hermite_values(40.0, 200);
        assert!(far.iter().all(|v| v.is_finite()));
        assert!(far[200] > 0.0);
    }

    #[test]
    fn resolvable_degree_grows_with_the_box() {
        let small = resolvable_degree(&GridSpec::new(1, 256, 8.0).unwrap(), 128);
        let big = resolvable_degree(&grid16(), 128);
        assert!(small >= 8 && small < 40, "{small}");
        assert!(big > 60, "{big}");
        assert!(HermiteBasis::with_max_degree(&GridSpec::new(1, 256, 8.0).unwrap(), 128).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        for g in [grid16(), GridSpec::new(1, 256, 8.0).unwrap(), GridSpec::new(2, 128, 8.0).unwrap()] {
            let b = HermiteBasis::new(&g).unwrap();
            let alphas = b.multi_indices();
            let fns: Vec<Field> = alphas.iter().map(|a| b.basis_function(a).unwrap()).collect();
            let step = if g.d() == 2 { 7 } else { 1 };
            for i in (0..fns.len()).step_by(step) {
                for j in (0..fns.len()).step_by(step) {
                    let v = fns[i].inner(&fns[j]);
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((v - Complex64::new(e, 0.0)).norm() < 1e-8, "{:?} {:?}: {v}", alphas[i], alphas[j]);
                }
            }
        }
    }

    #[test]
    fn eigenfunctions_of_the_oscillator() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        for k in [0usize, 1, 5, 20, b.max_degree() - 2] {
            let phi = b.basis_function(&[k]).unwrap();
            let hphi = apply_hamiltonian(&phi);
            let err = hphi.distance_l2(&phi.scale(Complex64::new((2 * k + 1) as f64, 0.0)));
            assert!(err < 1e-6 * (2 * k + 1) as f64, "k={k}: {err}");
        }
        let g2 = GridSpec::new(2, 128, 8.0).unwrap();
        let b2 = HermiteBasis::new(&g2).unwrap();
        let phi = b2.basis_function(&[2, 3]).unwrap();
        let err = apply_hamiltonian(&phi).distance_l2(&phi.scale(Complex64::new(12.0, 0.0)));
        assert!(err < 1e-6 * 12.0);
    }

    #[test]
    fn ground_state_coefficients() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        let h0 = Field::from_fn(g, |x| Complex64::new(PI.powf(-0.25) * (-0.5 * x[0] * x[0]).exp(), 0.0));
        let e = hermite_transform(&h0, &b).unwrap();
        assert!((e.coeff(&[0]) - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        for k in 1..=b.max_degree() {
            assert!(e.coeff(&[k]).norm() <= 1e-8);
        }
        let phi = b.basis_function(&[0]).unwrap();
        assert!(phi.distance_l2(&h0) < 1e-14);
    }

    #[test]
    fn schwartz_fields_are_resolved() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        for seed in 0..4 {
            let f = schwartz(g, seed);
            let e = hermite_transform(&f, &b).unwrap();
            assert!(e.residual <= 1e-6, "{}", e.residual);
            // transforming the reconstruction again reproduces the coefficients
            let e2 = hermite_transform(&hermite_reconstruct(&e, &b), &b).unwrap();
            let diff: f64 = e.tensor().iter().zip(e2.tensor()).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-8);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let g = grid16();
        let b = HermiteBasis::with_max_degree(&g, 6).unwrap();
        let f = schwartz(g, 1);
        assert!(hermite_transform(&f, &b).unwrap().residual > 1e-6);
        assert!(matches!(harmonic_propagate(&f, &b, 0.3), Err(Error::Truncation { .. })));
    }

    #[test]
    fn projections_are_orthogonal_idempotents() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        let f = schwartz(g, 2);
        for k in [0usize, 1, 4] {
            let pk = project(&f, &b, k).unwrap();
            assert!(project(&pk, &b, k).unwrap().distance_l2(&pk) < 1e-8);
            for l in [0usize, 2, 4] {
                if l != k {
                    assert!(project(&pk, &b, l).unwrap().norm_l2() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn energy_is_diagonal() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        let f = schwartz(g, 3);
        let e = hermite_transform(&f, &b).unwrap();
        let lhs = apply_hamiltonian(&f).inner(&f).re;
        let rhs: f64 = (0..=b.max_degree()).map(|k| (2 * k + 1) as f64 * e.shell_energy(k)).sum();
        assert!((lhs - rhs).abs() < 1e-6 * rhs);
    }

    #[test]
    fn half_period_and_full_period() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        let f = schwartz(g, 5);
        // t = π: global phase e^{-iπd}
        let out = harmonic_propagate(&f, &b, PI).unwrap();
        assert!(out.distance_l2(&f.scale(Complex64::from_polar(1.0, -PI))) < 1e-10);
        // t = π/2: e^{-iπ/2(2k+1)} = -i(-1)^k, i.e. -i f(-x)
        let out = harmonic_propagate(&f, &b, PI / 2.0).unwrap();
        let reflected = Field::from_fn(g, |x| {
            let j = ((-x[0] + g.half_width()) / g.dx()).round() as usize % g.n();
            f.values()[j] * Complex64::new(0.0, -1.0)
        });
        // x_0 = -L has no mirror on the grid; f is negligible there
        assert!(out.distance_l2(&reflected) < 1e-8);
    }

    #[test]
    fn quarter_period_is_a_fourier_transform() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new((-(x[0] - 1.0).powi(2)).exp(), 0.0));
        let out = harmonic_propagate(&f, &b, PI / 4.0).unwrap();
        // oracle: closed-form f̂(ξ) = √π e^{-π²ξ²} e^{-2πiξ} at ξ = x/(2π), scaled by (2π)^{-1/2}
        let err = (0..g.len())
            .map(|j| {
                let xi = g.coord(j) / (2.0 * PI);
                let fh = PI.sqrt() * (-PI * PI * xi * xi).exp() / (2.0 * PI).sqrt();
                (out.values()[j].norm() - fh).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
        // and a direct eigen-sum with a larger basis agrees
        let big = HermiteBasis::with_max_degree(&g, b.max_degree()).unwrap();
        let e = hermite_transform(&f, &big).unwrap();
        let direct = Field::from_fn(g, |x| {
            hermite_values(x[0], big.max_degree())
                .iter()
                .enumerate()
                .map(|(k, h)| e.coeff(&[k]) * Complex64::from_polar(*h, -PI / 4.0 * (2 * k + 1) as f64))
                .sum()
        });
        assert!(out.zip_map(&direct, |a, c| a - c).max_abs() < 1e-7);
        let _ = forward_fourier(&f).unwrap();
    }

    #[test]
    fn abstract_sign_inverts_equation_sign() {
        let g = grid16();
        let b = HermiteBasis::new(&g).unwrap();
        let f = schwartz(g, 6);
        let fwd = harmonic_multiplier(&f, &b, 0.9, PhaseSign::Equation).unwrap();
        let back = harmonic_multiplier(&fwd, &b, 0.9, PhaseSign::Abstract).unwrap();
        assert!(back.distance_l2(&f) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn unitary_and_periodic(t in -4.0f64..4.0, seed in 0u64..100) {
            let g = GridSpec::new(1, 256, 12.0).unwrap();
            let b = HermiteBasis::new(&g).unwrap();
            let f = schwartz(g, seed);
            let ft = harmonic_propagate_unchecked(&f, &b, t);
            prop_assert!((ft.norm_l2() - f.norm_l2()).abs() <= 1e-8 * f.norm_l2());
            let shifted = harmonic_propagate_unchecked(&f, &b, t + PI);
            prop_assert!(shifted.distance_l2(&ft.scale(Complex64::from_polar(1.0, -PI))) <= 1e-7);
        }
    }
}
