//! JSON run configuration for `modhf simulate`.
//!
//! Every physical parameter must be present; only the numerics (`dt`, `tol`
//! and the other solver knobs) have defaults.
//!
//! ```json
//! {
//!   "grid": { "d": 1, "n": 512, "half_width": 32.0 },
//!   "gamma": 0.5,
//!   "kappa": 0.25,
//!   "dispersion": { "type": "symbol", "symbol": { "kind": "laplacian" } },
//!   "fock_enabled": true,
//!   "radial_hint": false,
//!   "horizon": 2.0,
//!   "initial": [
//!     { "type": "gaussian", "center": [-1.0], "width": 2.0, "momentum": [0.1], "amplitude": 1.0 }
//!   ],
//!   "numerics": { "dt": 0.001 }
//! }
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::hartree::ZeroMode;
use crate::hermite::hermite_values;
use crate::io::read_fields;
use crate::solver::{Dispersion, ProblemSpec, Scheme, SolverOptions};
use crate::symbols::{SymbolKind, SymbolSpec};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    pub half_width: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DispersionConfig {
    Symbol { symbol: SymbolKind },
    Harmonic,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `a · e^{−|x−c|²/w²} · e^{2πi p·x}`
    Gaussian {
        center: Vec<f64>,
        width: f64,
        momentum: Vec<f64>,
        amplitude: f64,
    },
    /// Normalised tensor Hermite function `h_α`.
    Hermite { index: Vec<usize>, amplitude: f64 },
    /// `e^{−|x|²/w²} Σ_j a_j e^{2πi ω_j·x}` with `modes` random terms, `|ω| ≤ band`.
    Random { width: f64, modes: usize, band: f64 },
    /// Field `index` of a field file; relative paths resolve against the config.
    File { path: PathBuf, index: usize },
}

fn default_dt() -> f64 {
    1e-3
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub snapshot_stride: Option<usize>,
    pub scheme: Option<Scheme>,
    pub zero_mode: Option<ZeroMode>,
    pub dt_floor: Option<f64>,
    pub ceiling_factor: Option<f64>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            dt: default_dt(),
            tol: default_tol(),
            max_iter: None,
            snapshot_stride: None,
            scheme: None,
            zero_mode: None,
            dt_floor: None,
            ceiling_factor: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub gamma: f64,
    pub kappa: f64,
    pub dispersion: DispersionConfig,
    pub fock_enabled: bool,
    pub radial_hint: bool,
    pub horizon: f64,
    pub initial: Vec<InitialConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    /// Seed for `random` initial data; `--seed` overrides it.
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad(format!("config does not parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn options(&self) -> SolverOptions {
        let base = SolverOptions::default();
        let n = &self.numerics;
        SolverOptions {
            dt: n.dt,
            tol: n.tol,
            max_iter: n.max_iter.unwrap_or(base.max_iter),
            snapshot_stride: n.snapshot_stride.unwrap_or(base.snapshot_stride),
            scheme: n.scheme.unwrap_or(base.scheme),
            dt_floor: n.dt_floor.unwrap_or(base.dt_floor),
            ceiling_factor: n.ceiling_factor.unwrap_or(base.ceiling_factor),
        }
    }

    /// Build and validate the problem. `base_dir` anchors relative file paths.
    pub fn problem(&self, base_dir: &Path, seed_override: Option<u64>) -> Result<ProblemSpec> {
        let grid = GridSpec::new(self.grid.d, self.grid.n, self.grid.half_width)
            .map_err(|e| bad(format!("grid: {e}")))?;
        let dispersion = match &self.dispersion {
            DispersionConfig::Symbol { symbol } => {
                Dispersion::Symbol(SymbolSpec::from_kind(symbol.clone()).map_err(|e| bad(format!("symbol: {e}")))?)
            }
            DispersionConfig::Harmonic => Dispersion::Harmonic,
        };
        let seed = seed_override.or(self.seed).unwrap_or(0);
        let initial = self
            .initial
            .iter()
            .enumerate()
            .map(|(k, c)| build_initial(c, &grid, base_dir, seed, k))
            .collect::<Result<Vec<_>>>()?;
        let spec = ProblemSpec {
            gamma: self.gamma,
            kappa: self.kappa,
            dispersion,
            fock_enabled: self.fock_enabled,
            initial,
            horizon: self.horizon,
            radial_hint: self.radial_hint,
            zero_mode: self.numerics.zero_mode.unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_len(what: &str, v: &[impl Sized], d: usize, k: usize) -> Result<()> {
    if v.len() != d {
        return Err(bad(format!("initial[{k}].{what} has {} entries, expected d = {d}", v.len())));
    }
    Ok(())
}

fn build_initial(c: &InitialConfig, grid: &GridSpec, base_dir: &Path, seed: u64, k: usize) -> Result<Field> {
    let d = grid.d();
    match c {
        InitialConfig::Gaussian {
            center,
            width,
            momentum,
            amplitude,
        } => {
            check_len("center", center, d, k)?;
            check_len("momentum", momentum, d, k)?;
            if !(*width > 0.0) {
                return Err(bad(format!("initial[{k}].width must be positive")));
            }
            Ok(Field::from_fn(*grid, |x| {
                let r2: f64 = (0..d).map(|i| (x[i] - center[i]).powi(2)).sum();
                let ph: f64 = (0..d).map(|i| momentum[i] * x[i]).sum();
                Complex64::from_polar(amplitude * (-r2 / (width * width)).exp(), 2.0 * PI * ph)
            }))
        }
        InitialConfig::Hermite { index, amplitude } => {
            check_len("index", index, d, k)?;
            Ok(Field::from_fn(*grid, |x| {
                let v: f64 = (0..d).map(|i| hermite_values(x[i], index[i])[index[i]]).product();
                Complex64::new(amplitude * v, 0.0)
            }))
        }
        InitialConfig::Random { width, modes, band } => {
            if !(*width > 0.0) || *modes == 0 || !(*band >= 0.0) {
                return Err(bad(format!("initial[{k}]: random data needs width > 0, modes >= 1, band >= 0")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let terms: Vec<(Complex64, Vec<f64>)> = (0..*modes)
                .map(|_| {
                    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let w = (0..d).map(|_| rng.gen_range(-*band..=*band)).collect();
                    (a, w)
                })
                .collect();
            Ok(Field::from_fn(*grid, |x| {
                let r2: f64 = (0..d).map(|i| x[i] * x[i]).sum();
                let env = (-r2 / (width * width)).exp();
                terms
                    .iter()
                    .map(|(a, w)| {
                        let ph: f64 = (0..d).map(|i| w[i] * x[i]).sum();
                        a * Complex64::from_polar(env, 2.0 * PI * ph)
                    })
                    .sum()
            }))
        }
        InitialConfig::File { path, index } => {
            let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            let fields = read_fields(&full).map_err(|e| bad(format!("initial[{k}]: {}: {e}", full.display())))?;
            let f = fields
                .into_iter()
                .nth(*index)
                .ok_or_else(|| bad(format!("initial[{k}]: field index {index} out of range")))?;
            if f.grid() != grid {
                return Err(bad(format!("initial[{k}]: file grid differs from the configured grid")));
            }
            Ok(f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"{
        "grid": { "d": 1, "n": 64, "half_width": 8.0 },
        "gamma": 0.5, "kappa": 0.25,
        "dispersion": { "type": "symbol", "symbol": { "kind": "laplacian" } },
        "fock_enabled": true, "radial_hint": false, "horizon": 0.1,
        "initial": [
            { "type": "gaussian", "center": [-1.0], "width": 2.0, "momentum": [0.1], "amplitude": 1.0 },
            { "type": "random", "width": 1.5, "modes": 3, "band": 1.0 }
        ]
    }"#;

    #[test]
    fn numerics_default_but_physics_does_not() {
        let c = RunConfig::from_json(REFERENCE).unwrap();
        let o = c.options();
        assert_eq!((o.dt, o.tol, o.max_iter), (1e-3, 1e-10, 50));
        let missing = REFERENCE.replace("\"kappa\": 0.25,", "");
        assert!(matches!(RunConfig::from_json(&missing), Err(Error::Config(_))));
    }

    #[test]
    fn builds_data_and_honours_the_seed() {
        let c = RunConfig::from_json(REFERENCE).unwrap();
        let a = c.problem(Path::new("."), Some(7)).unwrap();
        let b = c.problem(Path::new("."), Some(7)).unwrap();
        let other = c.problem(Path::new("."), Some(8)).unwrap();
        assert_eq!(a.initial, b.initial);
        assert_ne!(a.initial[1], other.initial[1]);
        let x = a.initial[0].grid().coord(40);
        let expect = Complex64::from_polar((-(x + 1.0f64).powi(2) / 4.0).exp(), 2.0 * PI * 0.1 * x);
        assert!((a.initial[0].values()[40] - expect).norm() < 1e-15);
    }

    #[test]
    fn invariant_violations_are_config_errors() {
        let c = RunConfig::from_json(&REFERENCE.replace("\"gamma\": 0.5", "\"gamma\": 1.0")).unwrap();
        match c.problem(Path::new("."), None) {
            Err(Error::Config(msg)) => assert!(msg.contains("gamma"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let c = RunConfig::from_json(&REFERENCE.replace("\"center\": [-1.0]", "\"center\": [-1.0, 0.0]")).unwrap();
        assert!(matches!(c.problem(Path::new("."), None), Err(Error::Config(_))));
    }
}
