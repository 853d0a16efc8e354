use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use modhf::config::RunConfig;
use modhf::family::sample_family;
use modhf::grid::GridSpec;
use modhf::io;
use modhf::modspace::{mod_norm, NormMethod, NormParams};
use modhf::solver::{integrate, Dispersion};
use modhf::symbols::{multiplier_growth_probe, SymbolSpec};
use modhf::verify::{self, Mode, SUITES};
use modhf::Error;

#[derive(Parser)]
#[command(name = "modhf", version, about = "Hartree–Fock dynamics and modulation-space norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured problem and write snapshots and diagnostics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Seed for random initial data; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Modulation norm of a field stored in a field file.
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value = "stft")]
        method: String,
        /// Which field of the file.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Run a verification suite (`all` runs every suite).
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Bounds file; defaults to `<out-dir>/bounds.json`.
        #[arg(long)]
        bounds: Option<PathBuf>,
    },
    /// Fit the growth exponent of a unimodular multiplier over the reference family.
    Probe {
        /// `laplacian` or `fractional:<alpha>`.
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,1")]
        times: Vec<f64>,
        #[arg(long, default_value = "decomp")]
        method: String,
    },
}

/// Exit status for a failed command.
fn status(e: &Error) -> u8 {
    match e {
        Error::BlowUpSuspected { .. } | Error::StepDiverged { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("MODHF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // fails only if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn simulate(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), Error> {
    let cfg = RunConfig::load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let spec = cfg.problem(base, seed)?;
    let opts = cfg.options();
    let traj = integrate(&spec, &opts)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("snapshots.bin"), io::encode_snapshots(&traj)?)?;
    io::write_text(&out_dir.join("diagnostics.csv"), &io::diagnostics_csv(&traj.diagnostics))?;

    let last = traj.final_state();
    let masses: Vec<String> = last.iter().map(|f| format!("{:.12}", f.norm_l2())).collect();
    let x0 = traj.x_norm[0].1;
    let growth = traj.x_norm.iter().map(|(_, h)| h / x0).fold(0.0, f64::max);
    let mut line = format!(
        "t = {} masses [{}] max mass drift {:.3e} max norm growth {:.6}",
        spec.horizon,
        masses.join(", "),
        traj.max_mass_drift(),
        growth
    );
    if spec.dispersion == Dispersion::Harmonic && spec.kappa == 0.0 {
        let periods = (spec.horizon / std::f64::consts::PI).round();
        if periods >= 1.0 && (spec.horizon - periods * std::f64::consts::PI).abs() < 1e-9 {
            let phase = Complex64::from_polar(1.0, -spec.horizon * spec.d() as f64);
            let res = last
                .iter()
                .zip(&spec.initial)
                .map(|(u, f)| u.distance_l2(&f.scale(phase)))
                .fold(0.0, f64::max);
            line.push_str(&format!(" phase-return residual {res:.3e}"));
        }
    }
    println!("{line}");
    Ok(())
}

fn norm(input: &Path, p: f64, q: f64, s: f64, method: &str, index: usize) -> Result<(), Error> {
    let method: NormMethod = method.parse()?;
    let params = NormParams::new(p, q, s)?;
    let fields = io::read_fields(input).map_err(|e| match e {
        Error::Io(err) => Error::Format(format!("{}: {err}", input.display())),
        other => other,
    })?;
    let f = fields
        .get(index)
        .ok_or_else(|| Error::Format(format!("field index {index} out of range ({} fields)", fields.len())))?;
    let value = mod_norm(f, &params, method)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    print!("{}\n{}", io::NORM_HEADER, io::norm_csv_row(&format!("{stem}:{index}"), &params, method, value));
    Ok(())
}

/// Returns whether every case passed.
fn run_verify(suite: &str, mode: &str, out_dir: &Path, bounds: Option<PathBuf>) -> Result<bool, Error> {
    let mode: Mode = mode.parse()?;
    let suites: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(Error::Config(format!(
            "unknown suite {suite:?}; known suites: all, {}",
            SUITES.join(", ")
        )));
    };
    std::fs::create_dir_all(out_dir)?;
    let bounds_path = bounds.unwrap_or_else(|| out_dir.join("bounds.json"));
    let mut bounds = verify::load_bounds(&bounds_path)?;
    let mut reports = Vec::new();
    for s in suites {
        let rep = verify::run_suite(s, mode, &mut bounds)?;
        println!(
            "{s}: {} cases, max ratio {:.6}, {}",
            rep.rows.len(),
            rep.max_ratio(),
            if rep.passed() { "pass" } else { "FAIL" }
        );
        reports.push(rep);
    }
    if mode == Mode::Record {
        verify::save_bounds(&bounds_path, &bounds)?;
    }
    let name = if suite == "all" { "verify_report.csv".to_string() } else { format!("verify_{suite}.csv") };
    io::write_text(&out_dir.join(name), &verify::report_csv(&reports))?;
    Ok(reports.iter().all(|r| r.passed()))
}

fn parse_symbol(s: &str) -> Result<SymbolSpec, Error> {
    match s.split_once(':') {
        None if s == "laplacian" => Ok(SymbolSpec::laplacian()),
        Some(("fractional", a)) => {
            let alpha: f64 = a
                .parse()
                .map_err(|_| Error::Config(format!("bad fractional order {a:?}")))?;
            SymbolSpec::fractional(alpha)
        }
        _ => Err(Error::Config(format!("unknown symbol {s:?}"))),
    }
}

fn probe(symbol: &str, p: f64, q: f64, times: &[f64], method: &str) -> Result<(), Error> {
    let sym = parse_symbol(symbol)?;
    let method: NormMethod = method.parse()?;
    let params = NormParams::new(p, q, 0.0)?;
    let grid = GridSpec::new(1, 1024, 32.0)?;
    let family: Vec<_> = sample_family(&grid)?.into_iter().map(|(_, f)| f).collect();
    let fit = multiplier_growth_probe(&sym, &params, times, &family, method)?;
    print!("{}", io::probe_csv(&fit.rows));
    println!("# fitted exponent {:.6}", fit.slope);
    Ok(())
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out_dir, seed } => simulate(&config, &out_dir, seed).map(|_| true),
        Command::Norm {
            input,
            p,
            q,
            s,
            method,
            index,
        } => norm(&input, p, q, s, &method, index).map(|_| true),
        Command::Verify {
            suite,
            mode,
            out_dir,
            bounds,
        } => run_verify(&suite, &mode, &out_dir, bounds),
        Command::Probe {
            symbol,
            p,
            q,
            times,
            method,
        } => probe(&symbol, p, q, &times, &method).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("modhf: {e}");
            ExitCode::from(status(&e))
        }
    }
}
