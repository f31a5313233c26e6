//! Benchmark scenarios: solve one heterogeneous problem under a menu of
//! complex shifts and report iterations, timings, and speed-ups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_rhs, ShiftSpec, SystemOperator};
use crate::field::norm;
use crate::grid::build_hierarchy;
use crate::krylov::fgmres;
use crate::scalar::{cx, Cx, Real};
use crate::shift_model::{bundled_coefficients, level_parameters, sigma_map, ShiftMapCoefficients};
use crate::twogrid::{CycleConfig, TwoGridPreconditioner};
use crate::wavenumber::{VelocityProfile, WavenumberField};

/// One entry of the shift menu ε ∈ {0, k, k^{3/2}, k², k^σ}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSelection {
    None,
    K,
    KThreeHalves,
    KSquared,
    Map,
}

impl ShiftSelection {
    pub fn label(&self) -> &'static str {
        match self {
            ShiftSelection::None => "0",
            ShiftSelection::K => "k",
            ShiftSelection::KThreeHalves => "k^3/2",
            ShiftSelection::KSquared => "k^2",
            ShiftSelection::Map => "k^sigma",
        }
    }
}

/// How the `map` shift handles a heterogeneous wavenumber: evaluate the map
/// once at k_max, or re-evaluate it pointwise at k(x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapMode {
    #[default]
    KMax,
    Pointwise,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig<T: Real> {
    pub profile: VelocityProfile<T>,
    pub order: usize,
    pub level: u32,
    pub k_max: T,
    /// Source location inside the unit square.
    pub source: (T, T),
    pub shifts: Vec<ShiftSelection>,
    pub tol: T,
    pub max_iter: usize,
    pub map_mode: MapMode,
    /// Map coefficients for the `map` shift; bundled ones when absent.
    pub coefficients: Option<ShiftMapCoefficients<T>>,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn new(
        profile: VelocityProfile<T>,
        order: usize,
        level: u32,
        k_max: T,
        shifts: Vec<ShiftSelection>,
    ) -> Self {
        Self {
            profile,
            order,
            level,
            k_max,
            source: (T::of(0.5), T::of(0.55)),
            shifts,
            tol: T::of(1e-8),
            max_iter: 500,
            map_mode: MapMode::default(),
            coefficients: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.shifts.is_empty() {
            return Err(Error::config("shift list must not be empty"));
        }
        let (sx, sy) = self.source;
        let inside = |v: T| v > T::zero() && v < T::one();
        if !(inside(sx) && inside(sy)) {
            return Err(Error::config("source location must lie strictly inside (0,1)²"));
        }
        if !(self.tol > T::zero() && self.tol.is_finite()) {
            return Err(Error::config("tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("iteration cap must be at least 1"));
        }
        Ok(())
    }
}

/// Point source f(x) = 2·exp(−1000‖x − s‖²).
pub fn gaussian_source<T: Real>(source: (T, T)) -> impl Fn(T, T) -> Cx<T> {
    move |x: T, y: T| {
        let dx = x - source.0;
        let dy = y - source.1;
        let r2 = dx * dx + dy * dy;
        cx(T::of(2.0) * (-(T::of(1000.0) * r2)).exp(), T::zero())
    }
}

/// Per-shift outcome. Times are wall-clock seconds around the Krylov loop,
/// which includes the lazily performed coarse factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRunReport {
    pub label: String,
    /// Shift exponent when the shift is a power of k (the map resolves to
    /// one under k_max mode); absent for ε = 0 and pointwise maps.
    pub sigma: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub final_residual: f64,
    pub speedup_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub order: usize,
    pub level: u32,
    pub k_max: f64,
    pub dofs: usize,
    pub threads: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub runs: Vec<ShiftRunReport>,
}

fn resolve_shift<T: Real>(
    selection: ShiftSelection,
    k_max: T,
    level: u32,
    mode: MapMode,
    coefficients: &ShiftMapCoefficients<T>,
) -> Result<(ShiftSpec<T>, Option<T>)> {
    Ok(match selection {
        ShiftSelection::None => (ShiftSpec::None, None),
        ShiftSelection::K => (ShiftSpec::k_pow(T::one())?, Some(T::one())),
        ShiftSelection::KThreeHalves => {
            (ShiftSpec::k_pow(T::of(1.5))?, Some(T::of(1.5)))
        }
        ShiftSelection::KSquared => (ShiftSpec::k_pow(T::of(2.0))?, Some(T::of(2.0))),
        ShiftSelection::Map => match mode {
            MapMode::KMax => {
                let sigma = sigma_map(k_max, level, coefficients);
                (ShiftSpec::k_pow(sigma)?, Some(sigma))
            }
            MapMode::Pointwise => {
                let (k_crit, alpha) = level_parameters(coefficients, level);
                (ShiftSpec::SigmaOfK { k_crit, alpha }, None)
            }
        },
    })
}

/// Solve the unshifted system once per selected shift, each time with the
/// V(3,3) twogrid preconditioner built on A(k, ε).
pub fn run_scenario<T: Real>(config: &ScenarioConfig<T>) -> Result<SolveReport> {
    config.validate()?;
    let (coarse, fine) = build_hierarchy(config.level, config.order, T::one())?;
    let field = WavenumberField::new(config.profile.clone(), config.k_max)?;
    let system = SystemOperator::new(&fine, &field, &ShiftSpec::None);
    let rhs = assemble_rhs(&fine, gaussian_source(config.source));
    let rhs_norm = norm(rhs.as_slice());
    let coefficients = match &config.coefficients {
        Some(c) => *c,
        None => bundled_coefficients(config.order)?,
    };

    let mut runs = Vec::with_capacity(config.shifts.len());
    for &selection in &config.shifts {
        let (shift, sigma) =
            resolve_shift(selection, config.k_max, config.level, config.map_mode, &coefficients)?;
        let mut pre =
            TwoGridPreconditioner::new(&coarse, &fine, &field, &shift, CycleConfig::default())?;
        let outcome = fgmres(
            |x: &[Cx<T>], y: &mut [Cx<T>]| system.apply(x, y),
            |r: &[Cx<T>], z: &mut [Cx<T>]| pre.apply(r, z),
            rhs.as_slice(),
            config.tol,
            config.max_iter,
        );
        let (iterations, converged, wall_time, final_residual) = match outcome {
            Ok((_, report)) => {
                let abs = report
                    .residual_history
                    .last()
                    .copied()
                    .unwrap_or_else(T::zero);
                let rel = if rhs_norm > T::zero() { abs / rhs_norm } else { T::zero() };
                (report.iterations, report.converged, report.wall_time, rel.as_f64())
            }
            Err(Error::NumericalBreakdown { iteration, residual }) => {
                (iteration, false, 0.0, residual)
            }
            Err(e) => return Err(e),
        };
        runs.push(ShiftRunReport {
            label: selection.label().to_string(),
            sigma: sigma.map(|s| s.as_f64()),
            iterations,
            converged,
            wall_time,
            final_residual,
            speedup_percent: None,
        });
    }

    // Speed-up against the unshifted baseline, converged runs only.
    let baseline = runs
        .iter()
        .find(|r| r.label == "0" && r.converged)
        .map(|r| r.wall_time);
    if let Some(t0) = baseline {
        for run in &mut runs {
            if run.converged && run.label != "0" && run.wall_time > 0.0 {
                run.speedup_percent = Some((t0 / run.wall_time - 1.0) * 100.0);
            }
        }
    }

    Ok(SolveReport {
        order: config.order,
        level: config.level,
        k_max: config.k_max.as_f64(),
        dofs: fine.dof_count(),
        threads: rayon::current_num_threads(),
        tol: config.tol.as_f64(),
        max_iter: config.max_iter,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

/// Serialize a report. The text table mirrors the layout
/// ε | Iter | Time | Speed-up, printing `>max_iter` and `--` for runs that
/// did not converge.
pub fn emit_report(report: &SolveReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Serialize(e.to_string())),
        ReportFormat::Csv => {
            let mut out =
                String::from("shift,sigma,iterations,converged,time_s,residual,speedup_pct\n");
            for r in &report.runs {
                let sigma = r.sigma.map(|s| s.to_string()).unwrap_or_default();
                let speedup = r
                    .speedup_percent
                    .map(|s| s.to_string())
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.label, sigma, r.iterations, r.converged, r.wall_time, r.final_residual,
                    speedup
                ));
            }
            Ok(out)
        }
        ReportFormat::Text => {
            let mut out = format!(
                "# p = {}, level = {}, k_max = {}, dofs = {}, threads = {}\n",
                report.order, report.level, report.k_max, report.dofs, report.threads
            );
            out.push_str(&format!(
                "{:<10} | {:>6} | {:>10} | {:>9}\n",
                "eps", "Iter", "Time [s]", "Speed-up"
            ));
            out.push_str(&format!("{}\n", "-".repeat(45)));
            for r in &report.runs {
                let (iter, time) = if r.converged {
                    (r.iterations.to_string(), format!("{:.2}", r.wall_time))
                } else {
                    (format!(">{}", report.max_iter), "--".to_string())
                };
                let speedup = match r.speedup_percent {
                    Some(s) if r.converged => format!("{s:+.1}%"),
                    _ => "--".to_string(),
                };
                out.push_str(&format!(
                    "{:<10} | {:>6} | {:>10} | {:>9}\n",
                    r.label, iter, time, speedup
                ));
            }
            Ok(out)
        }
    }
}

pub fn parse_report_json(text: &str) -> Result<SolveReport> {
    serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))
}
