//! Time integration of the coupled Hartree–Fock systems.
//!
//! The state is `N` fields `ψ_k`. Each system is written as
//! `i∂_tψ_k = Lψ_k + σ_H V ψ_k + σ_F F_k`, where `L` is the dispersion,
//! `V = K ∗ Σ|ψ_l|²` and `F_k = Σ ψ_l K ∗ (ψ̄_l ψ_k)`:
//!
//! | system | `L`            | `σ_H` | `σ_F` |
//! |--------|----------------|-------|-------|
//! | HF     | symbol `Φ(D)`  | −1    | +1    |
//! | RHF    | symbol `Φ(D)`  | −1    | 0     |
//! | HFHP   | `−Δ + |x|²`    | +1    | +1    |
//! | RHFHP  | `−Δ + |x|²`    | +1    | 0     |
//!
//! The free flow is therefore `e^{−itL}` in every case.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::grid::{lp_norm_unchecked, Field, GridSpec};
use crate::hartree::{fock_term, hartree_factor, HartreePotential, ZeroMode};
use crate::hermite::{harmonic_propagate, harmonic_propagate_unchecked, HermiteBasis};
use crate::modspace::{build_partition, mod_norm_decomp, DecompositionSpec, NormParams};
use crate::symbols::{Propagator, SymbolKind, SymbolSpec};

/// The linear part of the equation.
#[derive(Clone, Debug, PartialEq)]
pub enum Dispersion {
    Symbol(SymbolSpec),
    /// `−Δ + |x|²`, propagated in the Hermite basis.
    Harmonic,
}

/// One Cauchy problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub gamma: f64,
    pub kappa: f64,
    pub dispersion: Dispersion,
    pub fock_enabled: bool,
    pub initial: Vec<Field>,
    pub horizon: f64,
    pub radial_hint: bool,
    pub zero_mode: ZeroMode,
}

impl ProblemSpec {
    pub fn n_particles(&self) -> usize {
        self.initial.len()
    }

    /// Grid of the initial data; only meaningful after `validate`.
    pub fn grid(&self) -> GridSpec {
        *self.initial[0].grid()
    }

    pub fn d(&self) -> usize {
        self.grid().d()
    }

    /// Dispersion order used in the Strichartz pair; 2 for the oscillator.
    pub fn alpha(&self) -> f64 {
        match &self.dispersion {
            Dispersion::Symbol(s) => s.order(),
            Dispersion::Harmonic => 2.0,
        }
    }

    /// The admissible pair `(4α/γ, 4d/(2d−γ))`.
    pub fn strichartz_pair(&self) -> (f64, f64) {
        let d = self.d() as f64;
        (4.0 * self.alpha() / self.gamma, 4.0 * d / (2.0 * d - self.gamma))
    }

    /// `(σ_H, σ_F)` for this system.
    pub fn signs(&self) -> (f64, f64) {
        let fock = if self.fock_enabled { 1.0 } else { 0.0 };
        match self.dispersion {
            Dispersion::Symbol(_) => (-1.0, fock),
            Dispersion::Harmonic => (1.0, fock),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial.is_empty() {
            return config("N must be at least 1");
        }
        let grid = self.grid();
        let d = grid.d() as f64;
        for (k, f) in self.initial.iter().enumerate() {
            if f.grid() != &grid {
                return config(format!("initial datum {k} lives on a different grid"));
            }
            if !f.is_finite() {
                return config(format!("initial datum {k} has non-finite samples"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < d) {
            return config(format!(
                "gamma must satisfy 0 < gamma < d (gamma = {}, d = {})",
                self.gamma, grid.d()
            ));
        }
        if !self.kappa.is_finite() {
            return config("kappa must be finite");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return config("horizon T must be positive");
        }
        if let Dispersion::Symbol(sym) = &self.dispersion {
            if let SymbolKind::Fractional { alpha } = sym.kind() {
                let lo = 2.0 * d / (2.0 * d - 1.0);
                if *alpha > lo && *alpha < 2.0 && !(self.radial_hint && grid.d() >= 2) {
                    return config(format!(
                        "fractional order alpha = {alpha} in ({lo}, 2) requires radial data (radial_hint) and d >= 2"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Numerical knobs for `integrate`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub snapshot_stride: usize,
    pub scheme: Scheme,
    /// Smallest step the halving may reach.
    pub dt_floor: f64,
    /// Blow-up ceiling as a multiple of the initial X-norm.
    pub ceiling_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dt: 1e-3,
            tol: 1e-10,
            max_iter: 50,
            snapshot_stride: 100,
            scheme: Scheme::Picard,
            dt_floor: 1e-6,
            ceiling_factor: 1e6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Picard,
    Split,
}

enum Flow {
    Symbol(Propagator),
    Harmonic(HermiteBasis),
}

/// Precomputed operators for one problem.
pub struct Model {
    flow: Flow,
    pot: HartreePotential,
    sigma_h: f64,
    sigma_f: f64,
}

impl Model {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let grid = spec.grid();
        let flow = match &spec.dispersion {
            Dispersion::Symbol(s) => Flow::Symbol(Propagator::new(s, &grid)?),
            Dispersion::Harmonic => {
                let basis = HermiteBasis::new(&grid)?;
                for (k, f) in spec.initial.iter().enumerate() {
                    if let Err(e) = harmonic_propagate(f, &basis, 0.0) {
                        return config(format!("initial datum {k} is not resolved by the Hermite basis: {e}"));
                    }
                }
                Flow::Harmonic(basis)
            }
        };
        let pot = HartreePotential::new(&grid, spec.gamma, spec.kappa, spec.zero_mode)?;
        let (sigma_h, sigma_f) = spec.signs();
        Ok(Model {
            flow,
            pot,
            sigma_h,
            sigma_f,
        })
    }

    /// `e^{−itL} f`.
    pub fn free_flow(&self, f: &Field, t: f64) -> Field {
        match &self.flow {
            Flow::Symbol(p) => p.apply(f, -t),
            Flow::Harmonic(b) => harmonic_propagate_unchecked(f, b, t),
        }
    }

    pub fn potential(&self) -> &HartreePotential {
        &self.pot
    }

    /// `N_k = σ_H V ψ_k + σ_F F_k` for every `k`.
    pub fn nonlinearity(&self, states: &[Field]) -> Result<Vec<Field>> {
        if self.pot.kappa() == 0.0 {
            return Ok(states.iter().map(|s| Field::zeros(*s.grid())).collect());
        }
        let v = hartree_factor(states, &self.pot)?;
        let sh = Complex64::new(self.sigma_h, 0.0);
        let sf = Complex64::new(self.sigma_f, 0.0);
        (0..states.len())
            .into_par_iter()
            .map(|k| {
                let hart = (&v * &states[k]).scale(sh);
                if self.sigma_f == 0.0 {
                    Ok(hart)
                } else {
                    Ok(&hart + &fock_term(k, states, &self.pot)?.scale(sf))
                }
            })
            .collect()
    }

    /// Size of the exchange contribution `max_k ‖F_k‖_{L²}`.
    pub fn fock_size(&self, states: &[Field]) -> Result<f64> {
        let mut m: f64 = 0.0;
        for k in 0..states.len() {
            m = m.max(fock_term(k, states, &self.pot)?.norm_l2());
        }
        Ok(m)
    }
}

/// 4-node Gauss–Legendre collocation tableau on `[0, 1]`.
struct Tableau {
    c: [f64; 4],
    b: [f64; 4],
    a: [[f64; 4]; 4],
}

fn gauss_legendre4() -> Tableau {
    let (x1, x2) = (0.861_136_311_594_052_6, 0.339_981_043_584_856_3);
    let (w1, w2) = (0.347_854_845_137_453_8, 0.652_145_154_862_546_1);
    let c = [(1.0 - x1) / 2.0, (1.0 - x2) / 2.0, (1.0 + x2) / 2.0, (1.0 + x1) / 2.0];
    let b = [w1 / 2.0, w2 / 2.0, w2 / 2.0, w1 / 2.0];
    let lagrange = |j: usize, s: f64| -> f64 {
        (0..4)
            .filter(|&m| m != j)
            .map(|m| (s - c[m]) / (c[j] - c[m]))
            .product()
    };
    // ∫_0^{c_i} ℓ_j is a cubic integral, exact under the same rule rescaled
    let mut a = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = (0..4).map(|m| c[i] * b[m] * lagrange(j, c[i] * c[m])).sum();
        }
    }
    Tableau { c, b, a }
}

fn max_distance(a: &[Field], b: &[Field]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.distance_l2(y))
        .fold(0.0, f64::max)
}

/// `x − i·dt·Σ_j w_j g_j`, componentwise.
fn combine(x: &[Field], dt: f64, w: &[f64; 4], g: &[Vec<Field>]) -> Vec<Field> {
    (0..x.len())
        .map(|k| {
            let mut acc = x[k].clone();
            for (j, gj) in g.iter().enumerate() {
                let c = Complex64::new(0.0, -dt * w[j]);
                acc = acc.zip_map(&gj[k], |u, v| u + c * v);
            }
            acc
        })
        .collect()
}

/// One step of Picard iteration on the Duhamel formula in the interaction
/// picture, with the integral replaced by 4-node Gauss–Legendre collocation.
/// Returns the new states and the number of iterations.
pub fn picard_step(model: &Model, states: &[Field], dt: f64, tol: f64, max_iter: usize) -> Result<(Vec<Field>, usize)> {
    if !(dt > 0.0) || !(tol > 0.0) {
        return config("picard_step needs dt > 0 and tol > 0");
    }
    let tab = gauss_legendre4();
    let stage_rhs = |phi: &[Vec<Field>]| -> Result<Vec<Vec<Field>>> {
        (0..4)
            .into_par_iter()
            .map(|j| {
                let psi: Vec<Field> = phi[j].iter().map(|f| model.free_flow(f, tab.c[j] * dt)).collect();
                let n = model.nonlinearity(&psi)?;
                Ok(n.iter().map(|f| model.free_flow(f, -tab.c[j] * dt)).collect())
            })
            .collect()
    };
    let mut phi: Vec<Vec<Field>> = vec![states.to_vec(); 4];
    let mut last = f64::INFINITY;
    for it in 1..=max_iter {
        let g = stage_rhs(&phi)?;
        let next: Vec<Vec<Field>> = (0..4).map(|i| combine(states, dt, &tab.a[i], &g)).collect();
        last = (0..4).map(|i| max_distance(&next[i], &phi[i])).fold(0.0, f64::max);
        phi = next;
        if !last.is_finite() {
            break;
        }
        if last < tol {
            let g = stage_rhs(&phi)?;
            let end = combine(states, dt, &tab.b, &g);
            return Ok((end.iter().map(|f| model.free_flow(f, dt)).collect(), it));
        }
    }
    Err(Error::StepDiverged {
        iterations: max_iter,
        last_update: last,
        dt,
    })
}

/// Exact flow of the nonlinear part over time `tau`, or its implicit
/// midpoint approximation when the exchange term is present.
fn nonlinear_substep(model: &Model, states: &[Field], tau: f64, tol: f64, max_iter: usize) -> Result<Vec<Field>> {
    if model.pot.kappa() == 0.0 {
        return Ok(states.to_vec());
    }
    if model.sigma_f == 0.0 {
        // |ψ_k| is invariant under the flow, so V is frozen and the flow is a phase
        let v = hartree_factor(states, &model.pot)?;
        let s = -model.sigma_h * tau;
        return Ok(states
            .iter()
            .map(|f| f.zip_map(&v, |u, w| u * Complex64::from_polar(1.0, s * w.re)))
            .collect());
    }
    let mut cur = states.to_vec();
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let mid: Vec<Field> = states
            .iter()
            .zip(&cur)
            .map(|(a, b)| a.zip_map(b, |u, v| (u + v) * 0.5))
            .collect();
        let n = model.nonlinearity(&mid)?;
        let next: Vec<Field> = states
            .iter()
            .zip(&n)
            .map(|(a, m)| a.zip_map(m, |u, v| u - Complex64::new(0.0, tau) * v))
            .collect();
        last = max_distance(&next, &cur);
        cur = next;
        if last < tol {
            return Ok(cur);
        }
        if !last.is_finite() {
            break;
        }
    }
    Err(Error::StepDiverged {
        iterations: max_iter,
        last_update: last,
        dt: tau,
    })
}

/// Strang splitting: half nonlinear, full linear, half nonlinear.
pub fn split_step(model: &Model, states: &[Field], dt: f64, tol: f64, max_iter: usize) -> Result<Vec<Field>> {
    if !(dt > 0.0) {
        return config("split_step needs dt > 0");
    }
    let half = nonlinear_substep(model, states, dt / 2.0, tol, max_iter)?;
    let lin: Vec<Field> = half.iter().map(|f| model.free_flow(f, dt)).collect();
    nonlinear_substep(model, &lin, dt / 2.0, tol, max_iter)
}

/// One row of the diagnostics table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub k: usize,
    pub mass: f64,
    pub m_norm_22: f64,
    pub m_norm_2q: f64,
    pub strichartz_acc: f64,
    pub picard_iters: usize,
}

/// Result of fitting the run against `h^{β'} ≤ C(1 + ∫h^{β'})`.
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallFit {
    pub beta_prime: f64,
    /// False when `γ ≥ d/2` and the exponent fell back to 2.
    pub from_kernel_split: bool,
    pub constant: f64,
    /// Largest `h^{β'}(t) / (C e^{Ct})`; at most 1 when the curve stays in the envelope.
    pub envelope_ratio: f64,
}

impl GronwallFit {
    pub fn escaped(&self) -> bool {
        self.envelope_ratio > 1.0 + 1e-9
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Field>>,
    pub diagnostics: Vec<DiagRow>,
    /// Iterations per step; split-step runs record zeros.
    pub picard_iterations: Vec<usize>,
    /// `(t, Σ_k ‖ψ_k(t)‖_X)` after every step, starting at `t = 0`.
    pub x_norm: Vec<(f64, f64)>,
    pub gronwall: GronwallFit,
}

impl Trajectory {
    pub fn final_state(&self) -> &[Field] {
        self.states.last().expect("trajectory has at least one snapshot")
    }

    /// Largest relative change of any component's mass over the run.
    pub fn max_mass_drift(&self) -> f64 {
        let n = self.states[0].len();
        let m0: Vec<f64> = self.diagnostics[..n].iter().map(|r| r.mass).collect();
        self.diagnostics
            .iter()
            .map(|r| (r.mass - m0[r.k]).abs() / m0[r.k])
            .fold(0.0, f64::max)
    }
}

/// The exponent `β'` from the kernel split: pick `q` in
/// `(d/(d−γ), 2]` with `(q−1)/q < α/d`, then `1/β = (d/α)(1 − 1/q)`.
/// Returns `None` when no such `q` exists.
pub fn kernel_split_exponent(d: usize, gamma: f64, alpha: f64) -> Option<f64> {
    let d = d as f64;
    let lo = d / (d - gamma);
    let hi = if alpha < d { (1.0 / (1.0 - alpha / d)).min(2.0) } else { 2.0 };
    if !(lo < hi) {
        return None;
    }
    let q = 0.5 * (lo + hi);
    let inv_beta = d / alpha * (1.0 - 1.0 / q);
    if !(inv_beta > 0.0 && inv_beta < 1.0) {
        return None;
    }
    Some(1.0 / (1.0 - inv_beta))
}

pub fn gronwall_fit(curve: &[(f64, f64)], beta_prime: f64, from_kernel_split: bool) -> GronwallFit {
    let mut integral = 0.0;
    let mut constant: f64 = 0.0;
    let mut integrals = Vec::with_capacity(curve.len());
    for (i, &(t, h)) in curve.iter().enumerate() {
        if i > 0 {
            let (t0, h0) = curve[i - 1];
            integral += 0.5 * (t - t0) * (h0.powf(beta_prime) + h.powf(beta_prime));
        }
        integrals.push(integral);
        constant = constant.max(h.powf(beta_prime) / (1.0 + integral));
    }
    let envelope_ratio = curve
        .iter()
        .map(|&(t, h)| h.powf(beta_prime) / (constant * (constant * t).exp()))
        .fold(0.0, f64::max);
    GronwallFit {
        beta_prime,
        from_kernel_split,
        constant,
        envelope_ratio,
    }
}

struct Monitor {
    dec: DecompositionSpec,
    p22: NormParams,
    p2q: NormParams,
    q_time: f64,
    r_space: f64,
    acc: Vec<f64>,
    last_pow: Vec<f64>,
}

impl Monitor {
    fn new(spec: &ProblemSpec) -> Result<Self> {
        let grid = spec.grid();
        let d = grid.d() as f64;
        let (q_time, r_space) = spec.strichartz_pair();
        Ok(Monitor {
            dec: build_partition(&grid)?,
            p22: NormParams::new(2.0, 2.0, 0.0)?,
            p2q: NormParams::new(2.0, 2.0 * d / (d + spec.gamma), 0.0)?,
            q_time,
            r_space,
            acc: vec![0.0; spec.n_particles()],
            last_pow: Vec::new(),
        })
    }

    fn x_norm(&self, states: &[Field]) -> Result<f64> {
        states.iter().map(|f| mod_norm_decomp(f, &self.p2q, &self.dec)).sum()
    }

    fn accumulate(&mut self, states: &[Field], h: f64) {
        let pows: Vec<f64> = states
            .iter()
            .map(|f| lp_norm_unchecked(f.values(), f.cell_volume(), self.r_space).powf(self.q_time))
            .collect();
        if !self.last_pow.is_empty() {
            for k in 0..pows.len() {
                self.acc[k] += 0.5 * h * (self.last_pow[k] + pows[k]);
            }
        }
        self.last_pow = pows;
    }

    fn rows(&self, t: f64, states: &[Field], iters: usize) -> Result<Vec<DiagRow>> {
        states
            .iter()
            .enumerate()
            .map(|(k, f)| {
                Ok(DiagRow {
                    t,
                    k,
                    mass: f.norm_l2(),
                    m_norm_22: mod_norm_decomp(f, &self.p22, &self.dec)?,
                    m_norm_2q: mod_norm_decomp(f, &self.p2q, &self.dec)?,
                    strichartz_acc: self.acc[k].powf(1.0 / self.q_time),
                    picard_iters: iters,
                })
            })
            .collect()
    }
}

fn advance(model: &Model, states: &[Field], dt: f64, opts: &SolverOptions, t: f64, x0: f64) -> Result<(Vec<Field>, usize)> {
    let attempt = match opts.scheme {
        Scheme::Picard => picard_step(model, states, dt, opts.tol, opts.max_iter),
        Scheme::Split => split_step(model, states, dt, opts.tol, opts.max_iter).map(|s| (s, 0)),
    };
    match attempt {
        Ok(r) => Ok(r),
        Err(Error::StepDiverged { .. }) => {
            let half = dt / 2.0;
            if half < opts.dt_floor {
                return Err(Error::BlowUpSuspected {
                    t,
                    norm: f64::NAN,
                    ceiling: opts.ceiling_factor * x0,
                    reason: format!("step halving reached the floor dt = {:e}", opts.dt_floor),
                });
            }
            let (mid, a) = advance(model, states, half, opts, t, x0)?;
            let (end, b) = advance(model, &mid, half, opts, t + half, x0)?;
            Ok((end, a + b))
        }
        Err(e) => Err(e),
    }
}

/// Integrate `spec` to its horizon.
pub fn integrate(spec: &ProblemSpec, opts: &SolverOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || !(opts.tol > 0.0) || opts.max_iter == 0 || opts.snapshot_stride == 0 {
        return config("solver options need dt > 0, tol > 0, max_iter >= 1 and snapshot_stride >= 1");
    }
    let model = Model::new(spec)?;
    let mut monitor = Monitor::new(spec)?;
    let steps = ((spec.horizon / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = spec.horizon / steps as f64;

    let mut states = spec.initial.clone();
    let x0 = monitor.x_norm(&states)?;
    let ceiling = opts.ceiling_factor * x0;
    monitor.accumulate(&states, dt);

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![states.clone()],
        diagnostics: monitor.rows(0.0, &states, 0)?,
        picard_iterations: Vec::with_capacity(steps),
        x_norm: vec![(0.0, x0)],
        gronwall: gronwall_fit(&[], 2.0, false),
    };
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let t = step as f64 * dt;
        let (next, iters) = advance(&model, &states, dt, opts, t0, x0)?;
        states = next;
        let x = monitor.x_norm(&states)?;
        if !x.is_finite() || x > ceiling {
            return Err(Error::BlowUpSuspected {
                t,
                norm: x,
                ceiling,
                reason: "X-norm exceeded its ceiling".into(),
            });
        }
        monitor.accumulate(&states, dt);
        traj.picard_iterations.push(iters);
        traj.x_norm.push((t, x));
        if step % opts.snapshot_stride == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(states.clone());
            traj.diagnostics.extend(monitor.rows(t, &states, iters)?);
        }
    }
    let (beta_prime, from_split) = match kernel_split_exponent(spec.d(), spec.gamma, spec.alpha()) {
        Some(b) if spec.gamma < spec.d() as f64 / 2.0 => (b, true),
        _ => (2.0, false),
    };
    traj.gronwall = gronwall_fit(&traj.x_norm, beta_prime, from_split);
    Ok(traj)
}

/// Phase factor `e^{−iπd}` picked up by the oscillator flow over `t = π`.
pub fn harmonic_period_phase(d: usize) -> Complex64 {
    Complex64::from_polar(1.0, -PI * d as f64)
}
