//! Regression harness for the inequalities: each suite evaluates
//! `lhs / rhs` over the reference family, groups the ratios, and either
//! records the extremes as bounds or asserts against stored ones.
//!
//! One-sided groups check `max ratio ≤ bound × 1.10`. Two-sided groups
//! (norm equivalences and invariances) also check `min ratio ≥ bound / 1.10`.
//! The isometry suite uses the fixed window `[0.98, 1.02]` and stores nothing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::family::{reference_family, sample_family, Member};
use crate::grid::{forward_fourier, lp_norm, Field, GridSpec};
use crate::hartree::{riesz_convolve, trilinear, HartreePotential, ZeroMode};
use crate::hermite::{harmonic_propagate, HermiteBasis};
use crate::modspace::{build_partition, mod_norm_decomp, mod_norm_stft, NormParams, WindowSpec};
use crate::symbols::{kernel_l1_norm, SymbolSpec};

pub const SUITES: [&str; 10] = [
    "algebra",
    "multiplier",
    "trilinear",
    "riesz_smoothing",
    "intersection",
    "difference",
    "isometry",
    "kernel",
    "embedding",
    "equivalence",
];

/// Slack applied to stored bounds in assert mode.
pub const SLACK: f64 = 1.10;
pub const ISOMETRY_WINDOW: (f64, f64) = (0.98, 1.02);

/// `(n, L)` of the 1-D isometry grid; wide enough that the Hermite basis
/// reaches degree 128.
pub const ISOMETRY_GRID: (usize, f64) = (1024, 20.0);

/// Family members the oscillator basis resolves on the isometry grid.
pub const ISOMETRY_MEMBERS: [&str; 6] = ["gauss_s1", "gauss_s2", "hermite_1", "random_1", "shifted_gauss", "wide_bump"];

/// Bounds recorded on the reference platform; the acceptance suite asserts
/// against these.
pub const FROZEN_BOUNDS: &str = include_str!("frozen_bounds.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Record,
    Assert,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "record" => Ok(Mode::Record),
            "assert" => Ok(Mode::Assert),
            _ => Err(Error::Config(format!("unknown mode {s:?} (expected record or assert)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupBound {
    pub max: f64,
    pub min: f64,
}

/// `suite → group → bound`.
pub type Bounds = BTreeMap<String, BTreeMap<String, GroupBound>>;

pub fn parse_bounds(text: &str) -> Result<Bounds> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("bounds file does not parse: {e}")))
}

pub fn frozen_bounds() -> Bounds {
    parse_bounds(FROZEN_BOUNDS).expect("frozen bounds parse")
}

pub fn load_bounds(path: &Path) -> Result<Bounds> {
    if !path.exists() {
        return Ok(Bounds::new());
    }
    parse_bounds(&std::fs::read_to_string(path)?)
}

pub fn save_bounds(path: &Path, bounds: &Bounds) -> Result<()> {
    let text = serde_json::to_string_pretty(bounds).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// One evaluated inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub group: String,
    pub case_id: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl Case {
    fn new(group: impl Into<String>, case_id: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Case {
            group: group.into(),
            case_id: case_id.into(),
            lhs,
            rhs,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub suite: String,
    pub case_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub rows: Vec<ReportRow>,
    /// Observed `(max, min)` ratio per group.
    pub observed: BTreeMap<String, GroupBound>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

pub const REPORT_HEADER: &str = "suite,case_id,lhs,rhs,ratio,bound,pass";

pub fn report_csv(reports: &[SuiteReport]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for rep in reports {
        for r in &rep.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.suite, r.case_id, r.lhs, r.rhs, r.ratio, r.bound, r.pass
            ));
        }
    }
    s
}

fn two_sided(suite: &str, group: &str) -> bool {
    match suite {
        "equivalence" | "isometry" => true,
        "embedding" => group.starts_with("fourier") || group.starts_with("conjugation"),
        _ => false,
    }
}

/// `1/p + γ/d − 1 = 1/(p + ε)` solved for `ε`; rejects `ε ≤ 0` or no solution.
pub fn solve_epsilon(p: f64, gamma: f64, d: usize) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return config(format!("p must lie in (1, ∞), got {p}"));
    }
    let inv = 1.0 / p + gamma / d as f64 - 1.0;
    if !(inv > 0.0) {
        return config(format!("1/p + γ/d − 1 = {inv} ≤ 0: no exponent p + ε exists"));
    }
    let eps = 1.0 / inv - p;
    if !(eps > 0.0) {
        return config(format!("ε = {eps} is not positive"));
    }
    Ok(eps)
}

fn norm(f: &Field, p: f64, q: f64, s: f64) -> Result<f64> {
    mod_norm_stft(f, &NormParams::new(p, q, s)?, &WindowSpec::standard())
}

/// Reference family on the standard verification grid `L = 8, n = 256`.
fn family() -> Result<Vec<(String, Field)>> {
    sample_family(&GridSpec::new(1, 256, 8.0)?)
}

fn fmt(x: f64) -> String {
    // short, stable ids such as 1.333 or 0.5
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn par_cases<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<Vec<Case>> + Sync + Send) -> Result<Vec<Case>> {
    let nested: Vec<Vec<Case>> = items.par_iter().map(f).collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// `‖fg‖_{M^{p,q}} ≲ ‖f‖_{FL¹}‖g‖_{M^{p,q}}` and the product embedding
/// `M^{2,1}·M^{2,1} ↪ M^{1,1}`.
fn suite_algebra() -> Result<Vec<Case>> {
    let fam = family()?;
    let n = fam.len();
    let idx: Vec<usize> = (0..n).collect();
    par_cases(&idx, |&i| {
        let (fid, f) = &fam[i];
        let (gid, g) = &fam[(i + 7) % n];
        let fg = f * g;
        let fl1 = lp_norm(&forward_fourier(f)?, 1.0)?;
        let mut out = Vec::new();
        for (p, q) in [(1.0, 1.0), (2.0, 2.0), (2.0, 4.0 / 3.0)] {
            out.push(Case::new(
                format!("fl1_module_p{}_q{}", fmt(p), fmt(q)),
                format!("fl1_module_p{}_q{}:{fid}*{gid}", fmt(p), fmt(q)),
                norm(&fg, p, q, 0.0)?,
                fl1 * norm(g, p, q, 0.0)?,
            ));
        }
        out.push(Case::new(
            "product_21x21_to_11",
            format!("product_21x21_to_11:{fid}*{gid}"),
            norm(&fg, 1.0, 1.0, 0.0)?,
            norm(f, 2.0, 1.0, 0.0)? * norm(g, 2.0, 1.0, 0.0)?,
        ));
        Ok(out)
    })
}

/// `‖U(t)f‖_{M^{p,q}} ≤ (1+|τ|)^{d|1/p−1/2|}‖f‖_{M^{p,q}}` with `τ` the
/// bound's time variable.
fn suite_multiplier() -> Result<Vec<Case>> {
    let grid = GridSpec::new(1, 1024, 32.0)?;
    let dec = build_partition(&grid)?;
    let fam = sample_family(&grid)?;
    let symbols = [SymbolSpec::laplacian(), SymbolSpec::fractional(1.5)?];
    par_cases(&fam, |(id, f)| {
        let mut out = Vec::new();
        for sym in &symbols {
            let prop = crate::symbols::Propagator::new(sym, &grid)?;
            for p in [1.0, 2.0] {
                let params = NormParams::new(p, 1.0, 0.0)?;
                let base = mod_norm_decomp(f, &params, &dec)?;
                for t in [0.05, 0.1, 0.25] {
                    let tau = sym.bound_time_scale() * t;
                    let growth = (1.0 + tau).powf((1.0 / p - 0.5).abs());
                    let group = format!("{}_p{}", sym.label(), fmt(p));
                    out.push(Case::new(
                        group.clone(),
                        format!("{group}_t{}:{id}", fmt(t)),
                        mod_norm_decomp(&prop.apply(f, t), &params, &dec)?,
                        growth * base,
                    ));
                }
            }
        }
        Ok(out)
    })
}

fn potential(grid: &GridSpec, gamma: f64) -> Result<HartreePotential> {
    HartreePotential::new(grid, gamma, 1.0, ZeroMode::Regularized)
}

/// `‖H_γ(f,g,h)‖_{M^{p,q}} ≲ ‖f‖‖g‖‖h‖` at `(p, q) = (2, 2d/(d+γ))`.
fn suite_trilinear() -> Result<Vec<Case>> {
    let fam = family()?;
    let grid = *fam[0].1.grid();
    let n = fam.len();
    let idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for gamma in [0.25, 0.5] {
        let pot = potential(&grid, gamma)?;
        let q = 2.0 / (1.0 + gamma);
        let norms: Vec<f64> = fam.par_iter().map(|(_, f)| norm(f, 2.0, q, 0.0)).collect::<Result<_>>()?;
        out.extend(par_cases(&idx, |&i| {
            let (j, k) = ((i + 1) % n, (i + 2) % n);
            let h = trilinear(&fam[i].1, &fam[j].1, &fam[k].1, &pot)?;
            let group = format!("gamma{}_p2_q{}", fmt(gamma), fmt(q));
            Ok(vec![Case::new(
                group.clone(),
                format!("{group}:{},{},{}", fam[i].0, fam[j].0, fam[k].0),
                norm(&h, 2.0, q, 0.0)?,
                norms[i] * norms[j] * norms[k],
            )])
        })?);
    }
    Ok(out)
}

/// `‖|·|^{−γ} ∗ f‖_{M^{p₂,q}_s} ≲ ‖f‖_{M^{p₁,q}_s}` with `1/p₁ + γ/d − 1 = 1/p₂`.
fn suite_riesz_smoothing() -> Result<Vec<Case>> {
    let fam = family()?;
    let grid = *fam[0].1.grid();
    let gamma: f64 = 0.5;
    let (p1, p2): (f64, f64) = (4.0 / 3.0, 4.0);
    debug_assert!((1.0 / p1 + gamma - 1.0 - 1.0 / p2).abs() < 1e-15);
    let pot = potential(&grid, gamma)?;
    par_cases(&fam, |(id, f)| {
        let kf = riesz_convolve(f, &pot)?;
        let mut out = Vec::new();
        for q in [1.0, 2.0] {
            for s in [0.0, 1.0] {
                let group = format!("q{}_s{}", fmt(q), fmt(s));
                out.push(Case::new(
                    group.clone(),
                    format!("{group}:{id}"),
                    norm(&kf, p2, q, s)?,
                    norm(f, p1, q, s)?,
                ));
            }
        }
        Ok(out)
    })
}

fn intersection_norm(f: &Field, p: f64) -> Result<f64> {
    Ok(norm(f, p, 1.0, 0.0)? + f.norm_l2())
}

/// `‖H_γ(f,g,h)‖_{M^{p,1}∩L²} ≲ Π‖·‖_{M^{p,1}∩L²}` for `p` with a valid `ε`.
fn suite_intersection() -> Result<Vec<Case>> {
    let fam = family()?;
    let grid = *fam[0].1.grid();
    let gamma = 0.5;
    let pot = potential(&grid, gamma)?;
    let n = fam.len();
    let idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for p in [1.2, 1.5] {
        let eps = solve_epsilon(p, gamma, 1)?;
        let norms: Vec<f64> = fam.par_iter().map(|(_, f)| intersection_norm(f, p)).collect::<Result<_>>()?;
        out.extend(par_cases(&idx, |&i| {
            let (j, k) = ((i + 3) % n, (i + 11) % n);
            let h = trilinear(&fam[i].1, &fam[j].1, &fam[k].1, &pot)?;
            let group = format!("p{}_eps{}", fmt(p), fmt(eps));
            Ok(vec![Case::new(
                group.clone(),
                format!("{group}:{},{},{}", fam[i].0, fam[j].0, fam[k].0),
                intersection_norm(&h, p)?,
                norms[i] * norms[j] * norms[k],
            )])
        })?);
    }
    Ok(out)
}

/// `‖(K∗|f|²)f − (K∗|g|²)g‖ ≲ (‖f‖² + ‖f‖‖g‖ + ‖g‖²)‖f − g‖` in `M^{p,q}`
/// and in `M^{p,1} ∩ L²`.
fn suite_difference() -> Result<Vec<Case>> {
    let fam = family()?;
    let grid = *fam[0].1.grid();
    let gamma = 0.5;
    let pot = potential(&grid, gamma)?;
    let n = fam.len();
    let idx: Vec<usize> = (0..n).collect();
    let cubic = |f: &Field| -> Result<Field> { trilinear(f, f, f, &pot) };
    par_cases(&idx, |&i| {
        let (fid, f) = &fam[i];
        let (pid, pert) = &fam[(i + 3) % n];
        let g = f + &pert.scale(Complex64::new(0.25, 0.1));
        let diff = &cubic(f)? - &cubic(&g)?;
        let fg = f - &g;
        let mut out = Vec::new();
        let mut push = |group: String, nrm: &dyn Fn(&Field) -> Result<f64>| -> Result<()> {
            let (a, b) = (nrm(f)?, nrm(&g)?);
            out.push(Case::new(
                group.clone(),
                format!("{group}:{fid}+{pid}"),
                nrm(&diff)?,
                (a * a + a * b + b * b) * nrm(&fg)?,
            ));
            Ok(())
        };
        for (p, q) in [(2.0, 4.0 / 3.0), (1.0, 1.0)] {
            push(format!("p{}_q{}", fmt(p), fmt(q)), &|h| norm(h, p, q, 0.0))?;
        }
        push("intersection_p1.5".into(), &|h| intersection_norm(h, 1.5))?;
        Ok(out)
    })
}

/// `‖e^{−itH}f‖_{M^{p,p}} / ‖f‖_{M^{p,p}}` with the oscillator ground state as window.
fn suite_isometry() -> Result<Vec<Case>> {
    let grid = GridSpec::new(1, ISOMETRY_GRID.0, ISOMETRY_GRID.1)?;
    let basis = HermiteBasis::new(&grid)?;
    let window = WindowSpec::oscillator_ground();
    let members: Vec<Member> = reference_family()
        .into_iter()
        .filter(|m| ISOMETRY_MEMBERS.contains(&m.id.as_str()))
        .collect();
    par_cases(&members, |m| {
        let f = m.sample(&grid)?;
        let mut out = Vec::new();
        for p in [1.0, 2.0] {
            let params = NormParams::new(p, p, 0.0)?;
            let base = mod_norm_stft(&f, &params, &window)?;
            for t in [0.3, 1.0, 2.7] {
                let u = harmonic_propagate(&f, &basis, t)?;
                let group = format!("p{}", fmt(p));
                out.push(Case::new(
                    group.clone(),
                    format!("{group}_t{}:{}", fmt(t), m.id),
                    mod_norm_stft(&u, &params, &window)?,
                    base,
                ));
            }
        }
        Ok(out)
    })
}

/// Kernel sizes at the bands and times of the growth diagnostic.
pub const KERNEL_BANDS: [[i64; 2]; 3] = [[0, 0], [1, 0], [2, 1]];
pub const KERNEL_TIMES: [f64; 9] = [0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0];

/// `‖F⁻¹(σ_k e^{itP})‖_{L¹} ≲ max{|t|, 1}` for `P = ξ² − η²`.
fn suite_kernel() -> Result<Vec<Case>> {
    let grid = GridSpec::new(2, 256, 16.0)?;
    let pairs: Vec<([i64; 2], f64)> = KERNEL_BANDS
        .iter()
        .flat_map(|k| KERNEL_TIMES.iter().map(move |&t| (*k, t)))
        .collect();
    par_cases(&pairs, |&(k, t)| {
        let group = format!("k{}_{}", k[0], k[1]);
        Ok(vec![Case::new(
            group.clone(),
            format!("{group}_t{}", fmt(t)),
            kernel_l1_norm(&grid, k, t)?,
            t.max(1.0),
        )])
    })
}

/// Embeddings and invariances: `M^{p₁,q₁}_{s₁} ↪ M^{p₂,q₂}_{s₂}`,
/// `M^{p,q₁} ↪ L^p ↪ M^{p,q₂}`, Fourier invariance of `M^{p,p}`, and conjugation.
fn suite_embedding() -> Result<Vec<Case>> {
    let fam = family()?;
    par_cases(&fam, |(id, f)| {
        let mut out = Vec::new();
        let mut add = |group: &str, lhs: f64, rhs: f64| {
            out.push(Case::new(group, format!("{group}:{id}"), lhs, rhs));
        };
        let inf = f64::INFINITY;
        for ((p1, q1, s1), (p2, q2, s2)) in [
            ((1.0, 1.0, 0.0), (2.0, 2.0, 0.0)),
            ((2.0, 1.0, 0.0), (2.0, 2.0, 0.0)),
            ((1.0, 2.0, 0.0), (inf, 2.0, 0.0)),
            ((2.0, 2.0, 1.0), (2.0, 2.0, 0.0)),
        ] {
            let group = format!(
                "m{}_{}_{}_into_m{}_{}_{}",
                fmt(p1),
                fmt(q1),
                fmt(s1),
                fmt(p2),
                fmt(q2),
                fmt(s2)
            );
            add(&group, norm(f, p2, q2, s2)?, norm(f, p1, q1, s1)?);
        }
        for p in [1.0, 2.0, 4.0] {
            let conj = if p == 1.0 { inf } else { p / (p - 1.0) };
            let (lo, hi) = (p.min(conj), p.max(conj));
            let lp = lp_norm(f, p)?;
            add(&format!("m{}_{}_into_l{}", fmt(p), fmt(lo), fmt(p)), lp, norm(f, p, lo, 0.0)?);
            add(&format!("l{}_into_m{}_{}", fmt(p), fmt(p), fmt(hi)), norm(f, p, hi, 0.0)?, lp);
        }
        let fh = forward_fourier(f)?.spectrum_as_spatial()?;
        let fc = f.conj();
        for p in [1.0, 2.0] {
            add(&format!("fourier_p{}", fmt(p)), norm(&fh, p, p, 0.0)?, norm(f, p, p, 0.0)?);
            add(&format!("conjugation_p{}_q1", fmt(p)), norm(&fc, p, 1.0, 0.0)?, norm(f, p, 1.0, 0.0)?);
        }
        Ok(out)
    })
}

/// Pairs `(p, q)` on which the two norm definitions are compared.
pub const EQUIVALENCE_PAIRS: [(f64, f64); 3] = [(2.0, 2.0), (1.0, 1.0), (2.0, 4.0 / 3.0)];

/// `‖f‖_{decomp} / ‖f‖_{stft}` over the family.
fn suite_equivalence() -> Result<Vec<Case>> {
    let fam = family()?;
    let dec = build_partition(fam[0].1.grid())?;
    par_cases(&fam, |(id, f)| {
        EQUIVALENCE_PAIRS
            .iter()
            .map(|&(p, q)| {
                let params = NormParams::new(p, q, 0.0)?;
                let group = format!("p{}_q{}", fmt(p), fmt(q));
                Ok(Case::new(
                    group.clone(),
                    format!("{group}:{id}"),
                    mod_norm_decomp(f, &params, &dec)?,
                    mod_norm_stft(f, &params, &WindowSpec::standard())?,
                ))
            })
            .collect()
    })
}

/// Evaluate every case of a suite without judging them.
pub fn evaluate_suite(suite: &str) -> Result<Vec<Case>> {
    match suite {
        "algebra" => suite_algebra(),
        "multiplier" => suite_multiplier(),
        "trilinear" => suite_trilinear(),
        "riesz_smoothing" => suite_riesz_smoothing(),
        "intersection" => suite_intersection(),
        "difference" => suite_difference(),
        "isometry" => suite_isometry(),
        "kernel" => suite_kernel(),
        "embedding" => suite_embedding(),
        "equivalence" => suite_equivalence(),
        other => config(format!("unknown suite {other:?}; known suites: {}", SUITES.join(", "))),
    }
}

fn observe(cases: &[Case]) -> BTreeMap<String, GroupBound> {
    let mut obs: BTreeMap<String, GroupBound> = BTreeMap::new();
    for c in cases {
        let r = c.ratio();
        let e = obs.entry(c.group.clone()).or_insert(GroupBound { max: r, min: r });
        e.max = e.max.max(r);
        e.min = e.min.min(r);
    }
    obs
}

/// Judge evaluated cases. In record mode the observed extremes are written
/// into `bounds`; in assert mode `bounds` must hold every group.
pub fn judge(suite: &str, cases: Vec<Case>, mode: Mode, bounds: &mut Bounds) -> Result<SuiteReport> {
    if cases.iter().any(|c| !c.ratio().is_finite()) {
        return Err(Error::Domain(format!("suite {suite} produced a non-finite ratio")));
    }
    let observed = observe(&cases);
    let fixed = suite == "isometry";
    if mode == Mode::Record && !fixed {
        bounds.insert(suite.to_string(), observed.clone());
    }
    let stored = bounds.get(suite);
    let mut rows = Vec::with_capacity(cases.len());
    for c in cases {
        let ratio = c.ratio();
        let (bound, pass) = if fixed {
            let (lo, hi) = ISOMETRY_WINDOW;
            (hi, ratio >= lo && ratio <= hi)
        } else {
            let b = stored.and_then(|m| m.get(&c.group)).ok_or_else(|| {
                Error::Config(format!("no stored bound for suite {suite}, group {}", c.group))
            })?;
            let upper = b.max * SLACK;
            let ok_hi = ratio <= upper;
            let ok_lo = !two_sided(suite, &c.group) || ratio >= b.min / SLACK;
            (upper, ok_hi && ok_lo)
        };
        rows.push(ReportRow {
            suite: suite.to_string(),
            case_id: c.case_id,
            lhs: c.lhs,
            rhs: c.rhs,
            ratio,
            bound,
            pass,
        });
    }
    Ok(SuiteReport {
        suite: suite.to_string(),
        rows,
        observed,
    })
}

pub fn run_suite(suite: &str, mode: Mode, bounds: &mut Bounds) -> Result<SuiteReport> {
    let cases = evaluate_suite(suite)?;
    judge(suite, cases, mode, bounds)
}

/// Oscillator phase check used alongside the isometry: `‖e^{−iπH}f − e^{−iπd}f‖`.
pub fn harmonic_period_residual(f: &Field, basis: &HermiteBasis) -> Result<f64> {
    let u = harmonic_propagate(f, basis, PI)?;
    let phase = Complex64::from_polar(1.0, -PI * f.grid().d() as f64);
    Ok(u.distance_l2(&f.scale(phase)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_solver() {
        // d = 1, γ = 1/2: p + ε = 2p/(2 − p)
        let eps = solve_epsilon(1.5, 0.5, 1).unwrap();
        assert!((eps - (6.0 - 1.5)).abs() < 1e-12);
        assert!(solve_epsilon(2.0, 0.5, 1).is_err());
        assert!(solve_epsilon(3.0, 0.5, 1).is_err());
        assert!(solve_epsilon(1.0, 0.5, 1).is_err());
    }

    #[test]
    fn record_then_assert_round_trips() {
        let cases = vec![
            Case::new("a", "a:1", 1.0, 2.0),
            Case::new("a", "a:2", 3.0, 2.0),
            Case::new("b", "b:1", 1.0, 1.0),
        ];
        let mut bounds = Bounds::new();
        let rec = judge("trilinear", cases.clone(), Mode::Record, &mut bounds).unwrap();
        assert!(rec.passed());
        assert_eq!(bounds["trilinear"]["a"], GroupBound { max: 1.5, min: 0.5 });
        let rep = judge("trilinear", cases.clone(), Mode::Assert, &mut bounds).unwrap();
        assert!(rep.passed());
        // 10% slack on the upper side only for one-sided suites
        let mut worse = cases.clone();
        worse[1].lhs = 3.0 * 1.11;
        assert!(!judge("trilinear", worse, Mode::Assert, &mut bounds).unwrap().passed());
        let mut lower = cases;
        lower[0].lhs = 0.1;
        assert!(judge("trilinear", lower.clone(), Mode::Assert, &mut bounds).unwrap().passed());
        bounds.insert("equivalence".into(), bounds["trilinear"].clone());
        assert!(!judge("equivalence", lower, Mode::Assert, &mut bounds).unwrap().passed());
    }

    #[test]
    fn missing_bounds_are_a_config_error() {
        let cases = vec![Case::new("a", "a:1", 1.0, 2.0)];
        let r = judge("kernel", cases, Mode::Assert, &mut Bounds::new());
        assert!(matches!(r, Err(Error::Config(_))));
        assert!(matches!(evaluate_suite("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn frozen_bounds_cover_every_recorded_suite() {
        let b = frozen_bounds();
        for s in SUITES.iter().filter(|s| **s != "isometry") {
            assert!(b.contains_key(*s), "{s}");
        }
    }

    #[test]
    fn csv_has_the_documented_header() {
        let mut bounds = Bounds::new();
        let rep = judge("kernel", vec![Case::new("g", "g:x", 2.0, 1.0)], Mode::Record, &mut bounds).unwrap();
        let csv = report_csv(&[rep]);
        assert_eq!(csv, "suite,case_id,lhs,rhs,ratio,bound,pass\nkernel,g:x,2,1,2,2.2,true\n");
    }
}
