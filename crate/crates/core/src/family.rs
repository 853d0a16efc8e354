//! The frozen one-dimensional reference family used to estimate constants.
//!
//! Members are closed-form functions so the same family can be sampled on any
//! grid; the random members draw their parameters from a fixed ChaCha seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, Result};
use crate::grid::{Field, GridSpec};
use crate::hermite::hermite_values;

pub const FAMILY_SEED: u64 = 0x5eed_f00d;

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    /// `e^{-πx²/s²}`
    Gaussian { s: f64 },
    /// `e^{-πx²} e^{iπcx²}`
    Chirp { c: f64 },
    /// `e^{-πx²} e^{2πiξ₀x}`
    Bump { xi0: f64 },
    /// `(2π)^{1/4} h_k(√(2π) x)`, fixed by the Fourier transform up to `(-i)^k`
    Hermite { k: usize },
    /// `e^{-x²/2} Σ_j a_j e^{2πi w_j x}`
    Random { terms: Vec<(Complex64, f64)> },
    /// `a · base((x − x₀)/λ)` summed over parts
    Combo { parts: Vec<(Complex64, f64, f64, Shape)> },
}

impl Shape {
    fn eval(&self, x: f64) -> Complex64 {
        match self {
            Shape::Gaussian { s } => Complex64::new((-PI * x * x / (s * s)).exp(), 0.0),
            Shape::Chirp { c } => Complex64::from_polar((-PI * x * x).exp(), PI * c * x * x),
            Shape::Bump { xi0 } => Complex64::from_polar((-PI * x * x).exp(), 2.0 * PI * xi0 * x),
            Shape::Hermite { k } => {
                let r = (2.0 * PI).sqrt();
                Complex64::new((2.0 * PI).powf(0.25) * hermite_values(r * x, *k)[*k], 0.0)
            }
            Shape::Random { terms } => {
                let env = (-0.5 * x * x).exp();
                terms
                    .iter()
                    .map(|(a, w)| a * Complex64::from_polar(env, 2.0 * PI * w * x))
                    .sum()
            }
            Shape::Combo { parts } => parts
                .iter()
                .map(|(a, x0, lam, base)| a * base.eval((x - x0) / lam))
                .sum(),
        }
    }
}

/// One named member of the family.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub id: String,
    shape: Shape,
}

impl Member {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.shape.eval(x)
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<Field> {
        if grid.d() != 1 {
            return config("the reference family is one-dimensional");
        }
        Ok(Field::from_fn(*grid, |x| self.eval(x[0])))
    }
}

fn member(id: impl Into<String>, shape: Shape) -> Member {
    Member { id: id.into(), shape }
}

/// The 20 reference functions in a fixed order.
pub fn reference_family() -> Vec<Member> {
    let mut out = Vec::with_capacity(20);
    for s in [0.5, 1.0, 2.0] {
        out.push(member(format!("gauss_s{s}"), Shape::Gaussian { s }));
    }
    for c in [0.5, 1.0, 2.0] {
        out.push(member(format!("chirp_c{c}"), Shape::Chirp { c }));
    }
    for xi0 in [1.5, -2.3, 3.0] {
        out.push(member(format!("bump_w{xi0}"), Shape::Bump { xi0 }));
    }
    for k in [1usize, 3, 6] {
        out.push(member(format!("hermite_{k}"), Shape::Hermite { k }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(FAMILY_SEED);
    for i in 0..4 {
        let terms = (0..6)
            .map(|_| {
                let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (a, rng.gen_range(-2.5..2.5))
            })
            .collect();
        out.push(member(format!("random_{i}"), Shape::Random { terms }));
    }
    let one = Complex64::new(1.0, 0.0);
    let combos = vec![
        ("shifted_gauss", vec![(one, 1.5, 1.0, Shape::Gaussian { s: 1.0 })]),
        ("dilated_hermite", vec![(one, -1.0, 0.7, Shape::Hermite { k: 3 })]),
        (
            "chirp_plus_bump",
            vec![
                (one, -1.2, 1.0, Shape::Chirp { c: 1.0 }),
                (Complex64::new(0.0, 0.8), 1.0, 1.0, Shape::Bump { xi0: 2.0 }),
            ],
        ),
        ("wide_bump", vec![(Complex64::new(0.6, -0.3), 2.0, 1.5, Shape::Bump { xi0: -1.0 })]),
    ];
    for (id, parts) in combos {
        out.push(member(id, Shape::Combo { parts }));
    }
    out
}

/// Sample every member on `grid`.
pub fn sample_family(grid: &GridSpec) -> Result<Vec<(String, Field)>> {
    reference_family()
        .into_iter()
        .map(|m| m.sample(grid).map(|f| (m.id.clone(), f)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward_fourier;

    #[test]
    fn family_has_twenty_distinct_members() {
        let fam = reference_family();
        assert_eq!(fam.len(), 20);
        let mut ids: Vec<&str> = fam.iter().map(|m| m.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 20);
        assert_eq!(reference_family(), fam);
    }

    #[test]
    fn members_are_resolved_on_the_reference_grid() {
        // negligible at the box edge and at the edge of the frequency band
        let g = GridSpec::new(1, 256, 8.0).unwrap();
        for (id, f) in sample_family(&g).unwrap() {
            let peak = f.max_abs();
            let edge = f.values()[0].norm().max(f.values()[1].norm()).max(f.values()[255].norm());
            assert!(edge < 1e-10 * peak, "{id}: edge {edge}");
            let fh = forward_fourier(&f).unwrap();
            let top = fh.values()[0].norm().max(fh.values()[1].norm()).max(fh.values()[255].norm());
            assert!(top < 1e-10 * fh.max_abs(), "{id}: spectral edge {top}");
        }
    }

    #[test]
    fn scaled_hermite_is_normalised() {
        let g = GridSpec::new(1, 256, 8.0).unwrap();
        let h = member("h", Shape::Hermite { k: 6 }).sample(&g).unwrap();
        assert!((h.norm_l2() - 1.0).abs() < 1e-12);
    }
}
