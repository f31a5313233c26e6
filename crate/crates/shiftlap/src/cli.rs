//! Command-line surface. All numeric work is delegated to the library
//! modules; this file parses flags, moves bytes, and sets exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_rhs, ShiftSpec, SystemOperator};
use crate::field::norm;
use crate::grid::build_hierarchy;
use crate::krylov::fgmres;
use crate::lfa::{
    self, critical_exponent, LfaConfig, ThetaDomain, DEFAULT_THETA_RESOLUTION,
};
use crate::scalar::{cx, Cx};
use crate::scenario::{
    emit_report, run_scenario, MapMode, ReportFormat, ScenarioConfig, ShiftSelection,
    SolveReport,
};
use crate::shift_model::{
    bundled_coefficients, fit, generate_sample, golden_section, sigma_map, Dataset,
    FitConfig, ShiftMapCoefficients, SolveBudget,
};
use crate::twogrid::{CycleConfig, TwoGridPreconditioner};
use crate::wavenumber::{load_velocity_raster, wedge_profile, VelocityProfile, WavenumberField};

#[derive(Parser)]
#[command(
    name = "shiftlap",
    about = "Twogrid shifted-Laplacian preconditioning for 2D Helmholtz problems",
    version,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier-analysis predictions for the twogrid cycle.
    #[command(subcommand)]
    Lfa(LfaCommand),
    /// Sample near-optimal shift exponents by golden-section search.
    Sample(SampleArgs),
    /// Fit the exponent-map coefficients to a sample dataset.
    Fit(FitArgs),
    /// Evaluate the exponent map σ_p(k, ℓ).
    Map(MapArgs),
    /// Run a benchmark scenario over a menu of shifts.
    Solve(SolveArgs),
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(Subcommand)]
enum LfaCommand {
    /// Predicted convergence factor for one shift exponent.
    Rho(RhoArgs),
    /// Critical shift exponent over a list of kh values.
    SigmaC(SigmaCArgs),
}

#[derive(Args)]
struct RhoArgs {
    #[arg(long)]
    k: f64,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    omega: f64,
    #[arg(long, default_value_t = 3)]
    nu: usize,
    /// Sweep only the θ₂ = 0 line instead of the full frequency square.
    #[arg(long)]
    line: bool,
    #[arg(long, default_value_t = DEFAULT_THETA_RESOLUTION)]
    resolution: usize,
    /// Also write the full (θ₁, θ₂, ρ) surface as CSV.
    #[arg(long)]
    surface: Option<PathBuf>,
}

#[derive(Args)]
struct SigmaCArgs {
    #[arg(long)]
    h: f64,
    #[arg(long = "kh-list", value_delimiter = ',', required = true)]
    kh_list: Vec<f64>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    omega: f64,
    #[arg(long, default_value_t = 3)]
    nu: usize,
    #[arg(long)]
    line: bool,
    #[arg(long, default_value_t = DEFAULT_THETA_RESOLUTION)]
    resolution: usize,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    ell: u32,
    /// Number of wavenumbers to draw from the admissible interval.
    #[arg(long, default_value_t = 40)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 50_000)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    k: f64,
    #[arg(long)]
    ell: u32,
    #[arg(long)]
    p: usize,
    /// Coefficient JSON produced by `fit`; bundled values when absent.
    #[arg(long)]
    coeffs: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileToken {
    Constant,
    Wedge,
    Raster,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShiftToken {
    None,
    K,
    #[value(name = "k3/2")]
    KThreeHalves,
    #[value(name = "k2")]
    KSquared,
    Map,
}

impl From<ShiftToken> for ShiftSelection {
    fn from(t: ShiftToken) -> Self {
        match t {
            ShiftToken::None => ShiftSelection::None,
            ShiftToken::K => ShiftSelection::K,
            ShiftToken::KThreeHalves => ShiftSelection::KThreeHalves,
            ShiftToken::KSquared => ShiftSelection::KSquared,
            ShiftToken::Map => ShiftSelection::Map,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MapModeToken {
    Kmax,
    Pointwise,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatToken {
    Text,
    Json,
    Csv,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `x,y`".into());
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((x, y))
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    profile: ProfileToken,
    /// Velocity raster file, required for `--profile raster`.
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long)]
    ell: u32,
    #[arg(long)]
    kmax: f64,
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = vec![ShiftToken::None, ShiftToken::K, ShiftToken::KThreeHalves,
                                  ShiftToken::KSquared, ShiftToken::Map])]
    shifts: Vec<ShiftToken>,
    #[arg(long, value_parser = parse_point, default_value = "0.5,0.55")]
    source: (f64, f64),
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatToken::Text)]
    format: FormatToken,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
    #[arg(long = "map-mode", value_enum, default_value_t = MapModeToken::Kmax)]
    map_mode: MapModeToken,
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Force the level/wavenumber of the published large run (ℓ = 10,
    /// k_max = 450, p = 1) and check iteration counts against it.
    #[arg(long)]
    full: bool,
    /// Worker threads for element sweeps (whole process, set once).
    #[arg(long)]
    threads: Option<usize>,
}

/// On-disk coefficient format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub p: usize,
    pub kc0: f64,
    pub kc1: f64,
    pub a0: f64,
    pub a1: f64,
    pub meta: CoefficientMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMeta {
    pub epochs: usize,
    pub lr: f64,
    pub loss: f64,
}

impl CoefficientFile {
    pub fn coefficients(&self) -> ShiftMapCoefficients<f64> {
        ShiftMapCoefficients {
            order: self.p,
            kc0: self.kc0,
            kc1: self.kc1,
            a0: self.a0,
            a1: self.a1,
        }
    }
}

fn load_coefficients(path: &Path, order: usize) -> Result<ShiftMapCoefficients<f64>> {
    let text = std::fs::read_to_string(path)?;
    let file: CoefficientFile =
        serde_json::from_str(&text).map_err(|e| Error::Serialize(e.to_string()))?;
    if file.p != order {
        return Err(Error::config(format!(
            "coefficient file {} is for order {}, requested order {order}",
            path.display(),
            file.p
        )));
    }
    Ok(file.coefficients())
}

/// Parse `args` and execute. Returns the process exit code; normal output
/// goes to `out`, diagnostics to stderr.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Lfa(LfaCommand::Rho(args)) => lfa_rho(args, out),
        Command::Lfa(LfaCommand::SigmaC(args)) => lfa_sigma_c(args, out),
        Command::Sample(args) => sample(args, out),
        Command::Fit(args) => fit_command(args, out),
        Command::Map(args) => map_command(args, out),
        Command::Solve(args) => solve(args, out),
        Command::Selftest => selftest(out),
    }
}

fn domain(line: bool, resolution: usize) -> ThetaDomain {
    if line {
        ThetaDomain::Line { resolution }
    } else {
        ThetaDomain::Full { resolution }
    }
}

fn lfa_rho(args: RhoArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = LfaConfig::new(args.k, args.h, args.omega, args.nu, args.nu)?;
    let report = lfa::convergence_factor(&cfg, args.sigma, domain(args.line, args.resolution))?;
    writeln!(out, "{}", report.rho)?;
    if report.excluded > 0 {
        eprintln!(
            "excluded {} of {} frequencies as numerically degenerate",
            report.excluded,
            report.evaluated + report.excluded
        );
    }
    if let Some(path) = args.surface {
        let surface = lfa::rho_surface(&cfg, args.sigma, args.resolution)?;
        let mut text = String::from("theta1,theta2,rho\n");
        for p in surface {
            match p.rho {
                Some(r) => text.push_str(&format!("{},{},{}\n", p.theta1, p.theta2, r)),
                None => text.push_str(&format!("{},{},\n", p.theta1, p.theta2)),
            }
        }
        std::fs::write(&path, text)?;
        eprintln!("wrote frequency surface to {}", path.display());
    }
    Ok(())
}

fn lfa_sigma_c(args: SigmaCArgs, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "kh,sigma_c")?;
    for &kh in &args.kh_list {
        let cfg = LfaConfig::new(kh / args.h, args.h, args.omega, args.nu, args.nu)?;
        let sigma_c = critical_exponent(&cfg, domain(args.line, args.resolution))?;
        match sigma_c {
            Some(s) => writeln!(out, "{kh},{s}")?,
            None => writeln!(out, "{kh},")?,
        }
    }
    Ok(())
}

fn sample(args: SampleArgs, out: &mut dyn Write) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let h = 0.5f64.powi(args.ell as i32);
    let (k_lo, k_hi) = crate::shift_model::admissible_wavenumbers(args.p, h);
    let mut k_rng = rand_chacha::ChaCha20Rng::seed_from_u64(args.seed ^ 0xD1CE_5EED);
    let budget = SolveBudget::default();
    let mut records = Vec::with_capacity(args.count);
    let mut flats = 0usize;
    let mut breakdowns = 0usize;
    for i in 0..args.count {
        let k = k_rng.gen_range(k_lo..=k_hi);
        let sample = generate_sample(args.p, args.ell, k, args.seed.wrapping_add(i as u64), &budget)?;
        if sample.flat_objective {
            flats += 1;
        }
        breakdowns += sample.breakdowns;
        records.push(sample.record);
    }
    let dataset = Dataset::new(records);
    std::fs::write(&args.out, dataset.to_csv())?;
    writeln!(out, "wrote {} samples to {}", args.count, args.out.display())?;
    if flats > 0 {
        writeln!(out, "{flats} samples had a flat objective")?;
    }
    if breakdowns > 0 {
        writeln!(out, "{breakdowns} solves broke down and were scored as non-convergent")?;
    }
    Ok(())
}

fn fit_command(args: FitArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)?;
    let dataset: Dataset<f64> = Dataset::from_csv(&text)?;
    let config = FitConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        ..FitConfig::default()
    };
    let outcome = fit(&dataset, args.p, &config)?;
    let c = outcome.coefficients;
    if !c.plausible() {
        eprintln!("warning: fitted coefficients have an implausible shape (kc1 ≤ 0 or a1 < 0)");
    }
    let file = CoefficientFile {
        p: args.p,
        kc0: c.kc0,
        kc1: c.kc1,
        a0: c.a0,
        a1: c.a1,
        meta: CoefficientMeta { epochs: args.epochs, lr: args.lr, loss: outcome.loss },
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(&args.out, json + "\n")?;
    writeln!(
        out,
        "fit order {}: loss {} -> {} over {} epochs; wrote {}",
        args.p,
        outcome.initial_loss,
        outcome.loss,
        args.epochs,
        args.out.display()
    )?;
    Ok(())
}

fn map_command(args: MapArgs, out: &mut dyn Write) -> Result<()> {
    let coeffs = match &args.coeffs {
        Some(path) => load_coefficients(path, args.p)?,
        None => bundled_coefficients(args.p)?,
    };
    writeln!(out, "{}", sigma_map(args.k, args.ell, &coeffs))?;
    Ok(())
}

/// Published iteration counts for the full-scale run (ℓ = 10, k = 450,
/// p = 1, wedge): ε = 0, k, k^{3/2}, k^σ converge; k² does not.
const FULL_RUN_EXPECTED: [(&str, Option<usize>); 5] = [
    ("0", Some(412)),
    ("k", Some(330)),
    ("k^3/2", Some(96)),
    ("k^2", None),
    ("k^sigma", Some(93)),
];

fn check_full_run(report: &SolveReport) -> Result<()> {
    let mut failures = Vec::new();
    for run in &report.runs {
        let Some((_, expected)) = FULL_RUN_EXPECTED.iter().find(|(l, _)| *l == run.label)
        else {
            continue;
        };
        match expected {
            Some(n) => {
                let lo = (*n as f64 * 0.8).floor() as usize;
                let hi = (*n as f64 * 1.2).ceil() as usize;
                if !run.converged || run.iterations < lo || run.iterations > hi {
                    failures.push(format!(
                        "{}: expected {} ±20% iterations, got {}{}",
                        run.label,
                        n,
                        if run.converged { "" } else { ">" },
                        run.iterations
                    ));
                }
            }
            None => {
                if run.converged {
                    failures.push(format!(
                        "{}: expected non-convergence, converged in {}",
                        run.label, run.iterations
                    ));
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "full-run iteration counts out of band: {}",
            failures.join("; ")
        )))
    }
}

fn solve(mut args: SolveArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(n) = args.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized, --threads ignored");
        }
    }
    if args.full {
        args.p = 1;
        args.ell = 10;
        args.kmax = 450.0;
    }
    let profile: VelocityProfile<f64> = match args.profile {
        ProfileToken::Constant => VelocityProfile::Constant,
        ProfileToken::Wedge => wedge_profile(),
        ProfileToken::Raster => {
            let path = args.raster.as_ref().ok_or_else(|| {
                Error::config("--profile raster requires --raster <path>")
            })?;
            load_velocity_raster(path)?
        }
    };
    let mut config = ScenarioConfig::new(
        profile,
        args.p,
        args.ell,
        args.kmax,
        args.shifts.iter().map(|&t| t.into()).collect(),
    );
    config.source = args.source;
    config.tol = args.tol;
    config.max_iter = args.max_iter;
    config.map_mode = match args.map_mode {
        MapModeToken::Kmax => MapMode::KMax,
        MapModeToken::Pointwise => MapMode::Pointwise,
    };
    if let Some(path) = &args.coeffs {
        config.coefficients = Some(load_coefficients(path, args.p)?);
    }

    let report = run_scenario(&config)?;
    let format = match args.format {
        FormatToken::Text => ReportFormat::Text,
        FormatToken::Json => ReportFormat::Json,
        FormatToken::Csv => ReportFormat::Csv,
    };
    let rendered = emit_report(&report, format)?;
    match &args.report {
        Some(path) => {
            std::fs::write(path, rendered)?;
            writeln!(out, "wrote report to {}", path.display())?;
        }
        None => write!(out, "{rendered}")?,
    }
    if args.full {
        check_full_run(&report)?;
        writeln!(out, "full-run iteration counts within ±20% of the published values")?;
    }
    Ok(())
}

fn selftest(out: &mut dyn Write) -> Result<()> {
    let mut failures = 0usize;
    let mut report = |out: &mut dyn Write, name: &str, outcome: std::result::Result<(), String>| {
        match outcome {
            Ok(()) => {
                let _ = writeln!(out, "ok - {name}");
            }
            Err(detail) => {
                failures += 1;
                let _ = writeln!(out, "FAIL - {name}: {detail}");
            }
        }
    };

    report(out, "operator application matches assembled matrix", {
        (|| -> std::result::Result<(), String> {
            for p in 1..=3usize {
                let (_, fine) =
                    build_hierarchy(3, p, 1.0).map_err(|e| e.to_string())?;
                let field = WavenumberField::constant(5.0).map_err(|e| e.to_string())?;
                let shift = ShiftSpec::k_pow(1.5).map_err(|e| e.to_string())?;
                let op = SystemOperator::new(&fine, &field, &shift);
                let mat = op.assemble();
                let n = fine.dof_count();
                let x: Vec<Cx<f64>> = (0..n)
                    .map(|j| cx((j as f64 * 1.3 + p as f64).sin(), (j as f64 * 0.7).cos()))
                    .collect();
                let mut by_op = vec![Cx::default(); n];
                op.apply(&x, &mut by_op).map_err(|e| e.to_string())?;
                let mut by_mat = vec![Cx::default(); n];
                mat.matvec(&x, &mut by_mat);
                let diff: f64 = by_op
                    .iter()
                    .zip(&by_mat)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let scale = norm(&by_mat);
                if diff > 1e-12 * scale {
                    return Err(format!("order {p}: relative error {}", diff / scale));
                }
            }
            Ok(())
        })()
    });

    report(out, "coarse-grid correction symbol is a projector", {
        (|| -> std::result::Result<(), String> {
            let lam = cx(0.4, 0.9);
            for i in 0..20 {
                let t1 = (i as f64 * 0.37).sin() * 1.5;
                let t2 = (i as f64 * 0.61 + 0.2).sin() * 1.5;
                let sym = lfa::twogrid_symbol((t1, t2), lam, 2.0 / 3.0, 0, 0)
                    .ok_or("frequency unexpectedly excluded")?;
                for r in 0..4 {
                    for c in 0..4 {
                        let mut kk = cx(0.0, 0.0);
                        for l in 0..4 {
                            kk += sym.correction[r][l] * sym.correction[l][c];
                        }
                        if (kk - sym.correction[r][c]).norm() > 1e-12 {
                            return Err(format!("K² ≠ K at θ = ({t1}, {t2})"));
                        }
                    }
                }
            }
            Ok(())
        })()
    });

    report(out, "transfer symbol at zero frequency", {
        (|| -> std::result::Result<(), String> {
            let (pro, _) = lfa::transfer_symbols((0.0f64, 0.0));
            if (pro[0] - 4.0).abs() > 1e-14 || pro[1..].iter().any(|v| v.abs() > 1e-13) {
                return Err(format!("got {pro:?}"));
            }
            Ok(())
        })()
    });

    report(out, "bundled exponent map evaluation", {
        (|| -> std::result::Result<(), String> {
            let c = bundled_coefficients::<f64>(1).map_err(|e| e.to_string())?;
            let k_crit = 2.5790032999702346 * f64::exp(0.4592788619853418 * 10.0);
            let alpha = 1.7580549857142198 * f64::exp(-0.6261637288068426 * 10.0);
            let direct = 2.0 - f64::exp(-alpha * (450.0 - k_crit));
            let got = sigma_map(450.0, 10, &c);
            if (got - direct).abs() > 1e-12 {
                return Err(format!("map {got} vs direct {direct}"));
            }
            if (got - 1.48).abs() > 0.01 {
                return Err(format!("map value {got} is far from 1.48"));
            }
            Ok(())
        })()
    });

    report(out, "golden-section search on a quadratic", {
        (|| -> std::result::Result<(), String> {
            let x = golden_section(|s| Ok((s - 1.3) * (s - 1.3)), 1.0, 2.0, 1e-2)
                .map_err(|e| e.to_string())?;
            if (x - 1.3f64).abs() > 1e-2 {
                return Err(format!("minimizer {x}"));
            }
            Ok(())
        })()
    });

    report(out, "small preconditioned solve converges", {
        (|| -> std::result::Result<(), String> {
            let (coarse, fine) = build_hierarchy(4, 1, 1.0).map_err(|e| e.to_string())?;
            let field = WavenumberField::constant(8.0).map_err(|e| e.to_string())?;
            let system = SystemOperator::new(&fine, &field, &ShiftSpec::None);
            let shift = ShiftSpec::k_pow(2.0).map_err(|e| e.to_string())?;
            let mut pre = TwoGridPreconditioner::new(
                &coarse,
                &fine,
                &field,
                &shift,
                CycleConfig::default(),
            )
            .map_err(|e| e.to_string())?;
            let rhs = assemble_rhs(&fine, crate::scenario::gaussian_source((0.5, 0.55)));
            let (_, report) = fgmres(
                |x: &[Cx<f64>], y: &mut [Cx<f64>]| system.apply(x, y),
                |r: &[Cx<f64>], z: &mut [Cx<f64>]| pre.apply(r, z),
                rhs.as_slice(),
                1e-8,
                50,
            )
            .map_err(|e| e.to_string())?;
            if !report.converged {
                return Err(format!("no convergence in {} iterations", report.iterations));
            }
            Ok(())
        })()
    });

    if failures == 0 {
        writeln!(out, "all checks passed")?;
        Ok(())
    } else {
        Err(Error::config(format!("{failures} selftest check(s) failed")))
    }
}
