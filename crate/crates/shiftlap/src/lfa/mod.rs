//! Local Fourier analysis of the twogrid cycle for the lowest-order
//! discretization on uniform grids.
//!
//! Frequencies live on the low-frequency quarter (−π/2, π/2]². Each base
//! frequency couples with its three high-frequency companions under
//! coarsening, so every quantity here is a scalar per harmonic (fine symbol,
//! smoother symbol, transfer weights) or a 4×4 matrix (the twogrid error
//! symbol). The predicted convergence factor is the worst spectral radius of
//! that matrix over a frequency sweep.

pub mod eig;

use crate::error::{Error, Result};
use crate::scalar::{cx, magnitude, Cx, Real};
use num_traits::Zero;
use rayon::prelude::*;

pub use eig::spectral_radius4;

/// Smallest admissible per-axis resolution for frequency sweeps.
pub const MIN_THETA_RESOLUTION: usize = 64;

/// Per-axis sample count used by default sweeps.
pub const DEFAULT_THETA_RESOLUTION: usize = 129;

/// Bisection width for the critical-exponent search.
pub const SIGMA_SEARCH_TOL: f64 = 1e-3;

/// Analysis parameters: wavenumber, mesh size, and smoother settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfaConfig<T: Real> {
    pub k: T,
    pub h: T,
    pub omega: T,
    pub nu1: usize,
    pub nu2: usize,
}

impl<T: Real> LfaConfig<T> {
    pub fn new(k: T, h: T, omega: T, nu1: usize, nu2: usize) -> Result<Self> {
        if !(k > T::zero() && k.is_finite()) {
            return Err(Error::config("wavenumber must be positive and finite"));
        }
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::config("mesh size must be positive and finite"));
        }
        if k * h >= T::of(0.75) {
            return Err(Error::config(format!(
                "analysis requires kh < 0.75, got kh = {}",
                (k * h).as_f64()
            )));
        }
        if !(omega > T::zero() && omega <= T::one()) {
            return Err(Error::config("damping factor must lie in (0, 1]"));
        }
        Ok(Self { k, h, omega, nu1, nu2 })
    }

    /// Shifted coefficient λ = k² + i·k^σ for a shift exponent σ ∈ [1, 2].
    pub fn lambda(&self, sigma: T) -> Result<Cx<T>> {
        check_sigma(sigma)?;
        Ok(cx(self.k * self.k, self.k.powf(sigma)))
    }

    fn lambda_h2(&self, sigma: T) -> Result<Cx<T>> {
        let h2 = self.h * self.h;
        self.lambda(sigma).map(|l| l * h2)
    }
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if sigma < T::one() || sigma > T::of(2.0) || !sigma.is_finite() {
        return Err(Error::config(format!(
            "shift exponent must lie in [1, 2], got {}",
            sigma.as_f64()
        )));
    }
    Ok(())
}

/// The base frequency and its three coarsening companions, in the order
/// (0,0), (1,1), (1,0), (0,1). Shifting moves a component by ±π, toward 0.
pub fn harmonics<T: Real>(theta: (T, T)) -> [(T, T); 4] {
    let shift = |t: T| if t < T::zero() { t + T::PI() } else { t - T::PI() };
    let (t1, t2) = theta;
    [
        (t1, t2),
        (shift(t1), shift(t2)),
        (shift(t1), t2),
        (t1, shift(t2)),
    ]
}

/// Symbol of the fine-grid operator at one frequency, scaled by h⁻²-free
/// units: pass λh² for `lam_h2`.
pub fn fine_symbol<T: Real>(theta: (T, T), lam_h2: Cx<T>) -> Cx<T> {
    let (c1, c2) = (theta.0.cos(), theta.1.cos());
    let third = T::of(3.0).recip();
    let stiff = third
        * (T::of(8.0) - T::of(2.0) * c1 - T::of(2.0) * c2 - T::of(4.0) * c1 * c2);
    let mass = (T::of(16.0) + T::of(8.0) * c1 + T::of(8.0) * c2 + T::of(4.0) * c1 * c2)
        / T::of(36.0);
    cx(stiff, T::zero()) - lam_h2 * mass
}

/// Symbol of the rediscretized coarse operator at the base frequency. Equals
/// the fine symbol evaluated at doubled angle and doubled mesh size.
pub fn coarse_symbol<T: Real>(theta: (T, T), lam_h2: Cx<T>) -> Cx<T> {
    let doubled = (theta.0 + theta.0, theta.1 + theta.1);
    fine_symbol(doubled, lam_h2 * T::of(4.0))
}

/// Denominator of the Jacobi smoother symbol: the (frequency-independent)
/// diagonal entry of the operator stencil.
pub fn smoother_denominator<T: Real>(lam_h2: Cx<T>) -> Cx<T> {
    cx(T::of(8.0) / T::of(3.0), T::zero()) - lam_h2 * (T::of(16.0) / T::of(36.0))
}

/// Symbol of damped Jacobi at one frequency.
pub fn smoother_symbol<T: Real>(theta: (T, T), lam_h2: Cx<T>, omega: T) -> Cx<T> {
    let (c1, c2) = (theta.0.cos(), theta.1.cos());
    let off = (cx(T::of(2.0) / T::of(3.0), T::zero())
        + lam_h2 * (T::of(8.0) / T::of(36.0)))
        * (c1 + c2)
        + (cx(T::of(4.0) / T::of(3.0), T::zero()) + lam_h2 * (T::of(4.0) / T::of(36.0)))
            * (c1 * c2);
    let ratio = off / smoother_denominator(lam_h2);
    cx(T::one() - omega, T::zero()) + ratio * omega
}

/// Transfer weights per harmonic: (prolongation, restriction). Restriction
/// is the transpose scaled by 1/4.
pub fn transfer_symbols<T: Real>(theta: (T, T)) -> ([T; 4], [T; 4]) {
    let mut pro = [T::zero(); 4];
    let mut res = [T::zero(); 4];
    for (i, (t1, t2)) in harmonics(theta).into_iter().enumerate() {
        let v = (T::one() + t1.cos()) * (T::one() + t2.cos());
        pro[i] = v;
        res[i] = v * T::of(0.25);
    }
    (pro, res)
}

/// All per-frequency symbol data for one base frequency.
#[derive(Debug, Clone, Copy)]
pub struct TwoGridSymbol<T: Real> {
    /// Error-propagation symbol Ŝ^ν₂ K̂ Ŝ^ν₁.
    pub matrix: [[Cx<T>; 4]; 4],
    /// Coarse-grid correction symbol K̂ = I − p (L̂_2h)⁻¹ r∘L̂_h.
    pub correction: [[Cx<T>; 4]; 4],
    pub fine: [Cx<T>; 4],
    pub coarse: Cx<T>,
    pub smoother: [Cx<T>; 4],
    pub prolongation: [T; 4],
    pub restriction: [T; 4],
}

fn cpow<T: Real>(z: Cx<T>, n: usize) -> Cx<T> {
    let mut r = cx(T::one(), T::zero());
    for _ in 0..n {
        r *= z;
    }
    r
}

/// Assemble the 4×4 twogrid symbol at one base frequency, or `None` when the
/// frequency must be excluded because a symbol it divides by is numerically
/// zero (relative to the coefficient scale).
pub fn twogrid_symbol<T: Real>(
    theta: (T, T),
    lam_h2: Cx<T>,
    omega: T,
    nu1: usize,
    nu2: usize,
) -> Option<TwoGridSymbol<T>> {
    let tol = T::of(1e-10) * T::max(T::one(), magnitude(lam_h2));

    let denom = smoother_denominator(lam_h2);
    if magnitude(denom) < tol {
        return None;
    }
    let coarse = coarse_symbol(theta, lam_h2);
    if magnitude(coarse) < tol {
        return None;
    }

    let freqs = harmonics(theta);
    let mut fine = [Cx::<T>::zero(); 4];
    let mut smoother = [Cx::<T>::zero(); 4];
    for i in 0..4 {
        fine[i] = fine_symbol(freqs[i], lam_h2);
        if magnitude(fine[i]) < tol {
            return None;
        }
        smoother[i] = smoother_symbol(freqs[i], lam_h2, omega);
    }
    let (prolongation, restriction) = transfer_symbols(theta);

    let mut correction = [[Cx::<T>::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            correction[i][j] = -fine[j] * (prolongation[i] * restriction[j]) / coarse;
        }
        correction[i][i] += cx(T::one(), T::zero());
    }

    let mut matrix = [[Cx::<T>::zero(); 4]; 4];
    for i in 0..4 {
        let left = cpow(smoother[i], nu2);
        for j in 0..4 {
            matrix[i][j] = left * correction[i][j] * cpow(smoother[j], nu1);
        }
    }

    Some(TwoGridSymbol {
        matrix,
        correction,
        fine,
        coarse,
        smoother,
        prolongation,
        restriction,
    })
}

/// Frequency domain for a sweep: the full low-frequency square or the
/// θ₂ = 0 line, each with a per-axis sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaDomain {
    Full { resolution: usize },
    Line { resolution: usize },
}

impl ThetaDomain {
    pub fn full() -> Self {
        ThetaDomain::Full { resolution: DEFAULT_THETA_RESOLUTION }
    }

    pub fn line() -> Self {
        ThetaDomain::Line { resolution: DEFAULT_THETA_RESOLUTION }
    }

    fn resolution(&self) -> usize {
        match *self {
            ThetaDomain::Full { resolution } | ThetaDomain::Line { resolution } => resolution,
        }
    }
}

/// Outcome of a frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReport<T: Real> {
    /// Largest spectral radius over the evaluated frequencies.
    pub rho: T,
    /// Frequencies that contributed to the maximum.
    pub evaluated: usize,
    /// Frequencies excluded as numerically degenerate.
    pub excluded: usize,
}

fn theta_samples<T: Real>(resolution: usize) -> Vec<T> {
    let n = resolution;
    let span = T::PI();
    let start = -span / T::of(2.0);
    (0..n)
        .map(|j| start + span * T::of(j as f64) / T::of((n - 1) as f64))
        .collect()
}

/// Predicted twogrid convergence factor: max spectral radius of the error
/// symbol over the frequency domain.
pub fn convergence_factor<T: Real>(
    cfg: &LfaConfig<T>,
    sigma: T,
    domain: ThetaDomain,
) -> Result<SweepReport<T>> {
    let resolution = domain.resolution();
    if resolution < MIN_THETA_RESOLUTION {
        return Err(Error::config(format!(
            "frequency resolution must be at least {MIN_THETA_RESOLUTION}, got {resolution}"
        )));
    }
    let lam_h2 = cfg.lambda_h2(sigma)?;
    let thetas = theta_samples::<T>(resolution);

    let row = |t1: T, seconds: &[T]| -> (T, usize, usize) {
        let mut rho = T::zero();
        let mut evaluated = 0usize;
        let mut excluded = 0usize;
        for &t2 in seconds {
            match twogrid_symbol((t1, t2), lam_h2, cfg.omega, cfg.nu1, cfg.nu2) {
                Some(sym) => {
                    rho = rho.max(spectral_radius4(&sym.matrix));
                    evaluated += 1;
                }
                None => excluded += 1,
            }
        }
        (rho, evaluated, excluded)
    };

    let (rho, evaluated, excluded) = match domain {
        ThetaDomain::Full { .. } => thetas
            .par_iter()
            .map(|&t1| row(t1, &thetas))
            .reduce(
                || (T::zero(), 0, 0),
                |a, b| (a.0.max(b.0), a.1 + b.1, a.2 + b.2),
            ),
        ThetaDomain::Line { .. } => row(T::zero(), &thetas),
    };

    if evaluated == 0 {
        return Err(Error::DegenerateSymbolSweep);
    }
    Ok(SweepReport { rho, evaluated, excluded })
}

/// One row of a frequency-surface dump: spectral radius per (θ₁, θ₂), with
/// `None` marking excluded frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint<T: Real> {
    pub theta1: T,
    pub theta2: T,
    pub rho: Option<T>,
}

/// Spectral radius of the error symbol on the full frequency grid, row-major
/// in θ₁ then θ₂. Used by the surface dump.
pub fn rho_surface<T: Real>(
    cfg: &LfaConfig<T>,
    sigma: T,
    resolution: usize,
) -> Result<Vec<SurfacePoint<T>>> {
    if resolution < MIN_THETA_RESOLUTION {
        return Err(Error::config(format!(
            "frequency resolution must be at least {MIN_THETA_RESOLUTION}, got {resolution}"
        )));
    }
    let lam_h2 = cfg.lambda_h2(sigma)?;
    let thetas = theta_samples::<T>(resolution);
    let rows: Vec<Vec<SurfacePoint<T>>> = thetas
        .par_iter()
        .map(|&t1| {
            thetas
                .iter()
                .map(|&t2| SurfacePoint {
                    theta1: t1,
                    theta2: t2,
                    rho: twogrid_symbol((t1, t2), lam_h2, cfg.omega, cfg.nu1, cfg.nu2)
                        .map(|sym| spectral_radius4(&sym.matrix)),
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Smallest shift exponent that the analysis predicts to converge, to within
/// a bisection width of `SIGMA_SEARCH_TOL`. Returns `None` when even σ = 2
/// diverges. Falls back to a 200-point scan if the bisection cannot evaluate
/// an interior point.
pub fn critical_exponent<T: Real>(
    cfg: &LfaConfig<T>,
    domain: ThetaDomain,
) -> Result<Option<T>> {
    let one = T::one();
    let two = T::of(2.0);
    let hi_report = convergence_factor(cfg, two, domain)?;
    if hi_report.rho >= one {
        return Ok(None);
    }
    match convergence_factor(cfg, one, domain) {
        Ok(report) if report.rho < one => return Ok(Some(one)),
        Ok(_) | Err(Error::DegenerateSymbolSweep) => {}
        Err(e) => return Err(e),
    }

    let tol = T::of(SIGMA_SEARCH_TOL);
    let mut lo = one;
    let mut hi = two;
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        match convergence_factor(cfg, mid, domain) {
            Ok(report) if report.rho < one => hi = mid,
            Ok(_) => lo = mid,
            Err(Error::DegenerateSymbolSweep) => return scan_for_exponent(cfg, domain),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(hi))
}

fn scan_for_exponent<T: Real>(
    cfg: &LfaConfig<T>,
    domain: ThetaDomain,
) -> Result<Option<T>> {
    const POINTS: usize = 200;
    for j in 0..POINTS {
        let sigma = T::one() + T::of(j as f64) / T::of((POINTS - 1) as f64);
        if let Ok(report) = convergence_factor(cfg, sigma, domain) {
            if report.rho < T::one() {
                return Ok(Some(sigma));
            }
        }
    }
    Ok(None)
}
