//! Data-driven shift selection: golden-section sampling of near-optimal
//! shift exponents, the closed-form exponent map σ_p, its regression, and
//! the bundled coefficient sets.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::fem::{ShiftSpec, SystemOperator};
use crate::grid::build_hierarchy;
use crate::krylov::fgmres;
use crate::lfa::{critical_exponent, LfaConfig, ThetaDomain};
use crate::scalar::{cx, Cx, Real};
use crate::twogrid::{CycleConfig, TwoGridPreconditioner};
use crate::wavenumber::WavenumberField;

/// Coefficients of the exponent map σ_p for one element order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftMapCoefficients<T: Real> {
    pub order: usize,
    pub kc0: T,
    pub kc1: T,
    pub a0: T,
    pub a1: T,
}

impl<T: Real> ShiftMapCoefficients<T> {
    /// Loose shape check: the map is only meaningful with a positive
    /// critical-wavenumber prefactor and a non-negative slope prefactor.
    pub fn plausible(&self) -> bool {
        self.kc1 > T::zero() && self.a1 >= T::zero()
    }
}

/// Fitted coefficients for the supported element orders.
pub fn bundled_coefficients<T: Real>(order: usize) -> Result<ShiftMapCoefficients<T>> {
    let (kc0, kc1, a0, a1) = match order {
        1 => (
            0.4592788619853418,
            2.5790032999702346,
            -0.6261637288068426,
            1.7580549857142198,
        ),
        2 => (
            0.5736926870738827,
            2.5729974893966001,
            -0.6615199737374460,
            1.5966386518185063,
        ),
        3 => (
            0.6305770719029798,
            2.4284320222555804,
            -0.4465407372367102,
            0.1287828338493968,
        ),
        _ => {
            return Err(Error::config(format!(
                "no bundled shift-map coefficients for order {order}"
            )))
        }
    };
    Ok(ShiftMapCoefficients {
        order,
        kc0: T::of(kc0),
        kc1: T::of(kc1),
        a0: T::of(a0),
        a1: T::of(a1),
    })
}

/// Level-resolved map parameters (k_c(ℓ), α(ℓ)) = (kc1·e^{kc0·ℓ}, a1·e^{a0·ℓ}).
pub fn level_parameters<T: Real>(coeffs: &ShiftMapCoefficients<T>, level: u32) -> (T, T) {
    let el = T::of(level as f64);
    (
        coeffs.kc1 * (coeffs.kc0 * el).exp(),
        coeffs.a1 * (coeffs.a0 * el).exp(),
    )
}

/// The exponent map: σ_p(k, ℓ) = clamp(2 − exp(−α(ℓ)·(k − k_c(ℓ))), 1, 2).
pub fn sigma_map<T: Real>(k: T, level: u32, coeffs: &ShiftMapCoefficients<T>) -> T {
    let (k_crit, alpha) = level_parameters(coeffs, level);
    let beta = T::of(2.0) - (-(alpha * (k - k_crit))).exp();
    beta.max(T::one()).min(T::of(2.0))
}

/// Golden-section search for a minimum of `f` on [a, b]. Returns the
/// midpoint of the final bracket once its width is at most `tol`.
pub fn golden_section<T, F>(mut f: F, a: T, b: T, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::config("golden-section bracket must satisfy a < b"));
    }
    if !(tol > T::zero()) {
        return Err(Error::config("golden-section tolerance must be positive"));
    }
    let probe = |x: T, f: &mut F| -> Result<T> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { at: x.as_f64() });
        }
        Ok(v)
    };

    let invphi = (T::of(5.0).sqrt() - T::one()) / T::of(2.0);
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let mut fc = probe(c, &mut f)?;
    let mut fd = probe(d, &mut f)?;
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = probe(c, &mut f)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = probe(d, &mut f)?;
        }
    }
    Ok((lo + hi) / T::of(2.0))
}

/// Residual-reduction target and iteration cap for sampling solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveBudget<T: Real> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolveBudget<T> {
    fn default() -> Self {
        Self { tol: T::of(1e-8), max_iter: 50 }
    }
}

/// One sampled near-optimal exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord<T: Real> {
    pub k: T,
    pub ell: u32,
    pub p: usize,
    pub sigma_hat: T,
    pub rho: T,
    pub seed: u64,
    pub iterations: usize,
}

/// One objective evaluation during the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T: Real> {
    pub sigma: T,
    pub rho: T,
    pub iterations: usize,
}

/// A sample together with its search log.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample<T: Real> {
    pub record: SampleRecord<T>,
    /// Set when the search could not discriminate between exponents
    /// (every solve finished immediately or at the same rate).
    pub flat_objective: bool,
    pub evaluations: Vec<Evaluation<T>>,
    pub breakdowns: usize,
}

/// Admissible wavenumber interval [3p/(16h), 3p/(4h)] for a mesh size h.
pub fn admissible_wavenumbers<T: Real>(order: usize, mesh_size: T) -> (T, T) {
    let p = T::of(order as f64);
    let lo = T::of(3.0) * p / (T::of(16.0) * mesh_size);
    let hi = T::of(3.0) * p / (T::of(4.0) * mesh_size);
    (lo, hi)
}

/// Search the near-optimal shift exponent for one (p, ℓ, k) on the unit
/// square: golden-section over σ ∈ [1, 2] of the average FGMRES rate for the
/// unshifted system preconditioned with the V(3,3) cycle on A(k, k^σ).
pub fn generate_sample<T: Real>(
    order: usize,
    level: u32,
    k: T,
    seed: u64,
    budget: &SolveBudget<T>,
) -> Result<GeneratedSample<T>> {
    sample_on_domain(order, level, T::one(), k, seed, budget)
}

fn sample_on_domain<T: Real>(
    order: usize,
    level: u32,
    domain_size: T,
    k: T,
    seed: u64,
    budget: &SolveBudget<T>,
) -> Result<GeneratedSample<T>> {
    let (coarse, fine) = build_hierarchy(level, order, domain_size)?;
    let (k_lo, k_hi) = admissible_wavenumbers(order, fine.mesh_size);
    if !(k >= k_lo && k <= k_hi) {
        return Err(Error::config(format!(
            "wavenumber {} outside the admissible interval [{}, {}] for p = {order}, h = {}",
            k.as_f64(),
            k_lo.as_f64(),
            k_hi.as_f64(),
            fine.mesh_size.as_f64()
        )));
    }

    let field = WavenumberField::constant(k)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let rhs: Vec<Cx<T>> = (0..fine.dof_count())
        .map(|_| cx(T::of(rng.gen_range(-1.0..=1.0)), T::zero()))
        .collect();
    let unshifted = SystemOperator::new(&fine, &field, &ShiftSpec::None);

    let mut evaluations: Vec<Evaluation<T>> = Vec::new();
    let mut breakdowns = 0usize;
    let mut objective = |sigma: T| -> Result<T> {
        let shift = ShiftSpec::k_pow(sigma)?;
        let mut pre =
            TwoGridPreconditioner::new(&coarse, &fine, &field, &shift, CycleConfig::default())?;
        let outcome = fgmres(
            |x: &[Cx<T>], y: &mut [Cx<T>]| unshifted.apply(x, y),
            |r: &[Cx<T>], z: &mut [Cx<T>]| pre.apply(r, z),
            &rhs,
            budget.tol,
            budget.max_iter,
        );
        let (rho, iterations) = match outcome {
            Ok((_, report)) => (report.rho, report.iterations),
            Err(Error::NumericalBreakdown { iteration, .. }) => {
                breakdowns += 1;
                (T::one(), iteration)
            }
            Err(e) => return Err(e),
        };
        evaluations.push(Evaluation { sigma, rho, iterations });
        Ok(rho)
    };

    let sigma_hat = golden_section(&mut objective, T::one(), T::of(2.0), T::of(1e-2))?;
    objective(sigma_hat)?;
    let last = *evaluations.last().expect("final evaluation recorded");

    let (mut rho_min, mut rho_max) = (T::infinity(), T::neg_infinity());
    for e in &evaluations {
        rho_min = rho_min.min(e.rho);
        rho_max = rho_max.max(e.rho);
    }
    let flat_objective = evaluations.iter().all(|e| e.iterations <= 1)
        || rho_max - rho_min < T::of(1e-12);

    Ok(GeneratedSample {
        record: SampleRecord {
            k,
            ell: level,
            p: order,
            sigma_hat,
            rho: last.rho,
            seed,
            iterations: last.iterations,
        },
        flat_objective,
        evaluations,
        breakdowns,
    })
}

/// A collection of samples with lossless CSV serialization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset<T: Real> {
    pub records: Vec<SampleRecord<T>>,
}

pub const DATASET_HEADER: &str = "k,ell,p,sigma_hat,rho,seed,iters";

impl<T: Real> Dataset<T> {
    pub fn new(records: Vec<SampleRecord<T>>) -> Self {
        Self { records }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(DATASET_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.k, r.ell, r.p, r.sigma_hat, r.rho, r.seed, r.iterations
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == DATASET_HEADER => {}
            Some((_, header)) => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header `{DATASET_HEADER}`, got `{header}`"),
                })
            }
            None => {
                return Err(Error::Parse { line: 1, msg: "empty dataset file".into() })
            }
        }
        let mut records = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 7 fields, got {}", fields.len()),
                });
            }
            let real = |i: usize| -> Result<T> {
                fields[i].trim().parse::<f64>().map(T::of).map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("field {}: {e}", i + 1),
                })
            };
            let int = |i: usize| -> Result<u64> {
                fields[i].trim().parse::<u64>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("field {}: {e}", i + 1),
                })
            };
            records.push(SampleRecord {
                k: real(0)?,
                ell: int(1)? as u32,
                p: int(2)? as usize,
                sigma_hat: real(3)?,
                rho: real(4)?,
                seed: int(5)?,
                iterations: int(6)? as usize,
            });
        }
        Ok(Self { records })
    }
}

fn weighted_samples<T: Real>(
    dataset: &Dataset<T>,
    order: usize,
) -> Result<Vec<(SampleRecord<T>, T)>> {
    let total = dataset.records.len();
    let mut level_counts: HashMap<u32, usize> = HashMap::new();
    for r in &dataset.records {
        if r.p == order {
            *level_counts.entry(r.ell).or_insert(0) += 1;
        }
    }
    if level_counts.is_empty() {
        return Err(Error::EmptyDataset { p: order });
    }
    Ok(dataset
        .records
        .iter()
        .filter(|r| r.p == order)
        .map(|r| {
            let w = T::of(level_counts[&r.ell] as f64) / T::of(total as f64);
            (*r, (T::one() / w) * (T::one() / w))
        })
        .collect())
}

/// Weighted sum of squares Σ w_{ℓ,p}^{−2}·(σ̂ − σ_p(k, ℓ))² over the samples
/// of one order, with w_{ℓ,p} the share of the whole dataset carried by that
/// (ℓ, p) group.
pub fn regression_loss<T: Real>(
    coeffs: &ShiftMapCoefficients<T>,
    dataset: &Dataset<T>,
    order: usize,
) -> Result<T> {
    let samples = weighted_samples(dataset, order)?;
    let mut loss = T::zero();
    for (r, winv2) in &samples {
        let d = r.sigma_hat - sigma_map(r.k, r.ell, coeffs);
        loss += *winv2 * d * d;
    }
    Ok(loss)
}

/// Training hyperparameters for the coefficient fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T: Real> {
    pub learning_rate: T,
    pub epochs: usize,
    pub init: [T; 4],
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::of(1e-3),
            epochs: 50_000,
            init: [T::of(0.1), T::one(), T::of(-0.5), T::one()],
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
        }
    }
}

impl<T: Real> FitConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero() && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epoch count must be at least 1"));
        }
        Ok(())
    }
}

/// Result of a fit: the best coefficients seen and the loss trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome<T: Real> {
    pub coefficients: ShiftMapCoefficients<T>,
    pub initial_loss: T,
    pub loss: T,
    pub history: Vec<T>,
}

fn loss_and_gradient<T: Real>(
    params: &[T; 4],
    samples: &[(SampleRecord<T>, T)],
) -> (T, [T; 4]) {
    let [kc0, kc1, a0, a1] = *params;
    let two = T::of(2.0);
    let mut loss = T::zero();
    let mut g = [T::zero(); 4];
    for (r, winv2) in samples {
        let el = T::of(r.ell as f64);
        let ekc = (kc0 * el).exp();
        let k_crit = kc1 * ekc;
        let eal = (a0 * el).exp();
        let alpha = a1 * eal;
        let e = (-(alpha * (r.k - k_crit))).exp();
        let beta = two - e;
        if beta <= T::one() || beta >= two {
            // Clamped branch: constant map value, zero gradient.
            let sig = beta.max(T::one()).min(two);
            let d = sig - r.sigma_hat;
            loss += *winv2 * d * d;
            continue;
        }
        let d = beta - r.sigma_hat;
        loss += *winv2 * d * d;
        let common = two * *winv2 * d;
        let db_dkc = -(e * alpha);
        let db_dalpha = e * (r.k - k_crit);
        g[0] += common * db_dkc * (el * k_crit);
        g[1] += common * db_dkc * ekc;
        g[2] += common * db_dalpha * (el * alpha);
        g[3] += common * db_dalpha * eal;
    }
    (loss, g)
}

/// Full-batch ADAM fit of the four map coefficients for one order.
pub fn fit<T: Real>(
    dataset: &Dataset<T>,
    order: usize,
    config: &FitConfig<T>,
) -> Result<FitOutcome<T>> {
    config.validate()?;
    let samples = weighted_samples(dataset, order)?;
    let levels: BTreeSet<u32> = samples.iter().map(|(r, _)| r.ell).collect();
    if samples.len() < 8 || levels.len() < 2 {
        return Err(Error::config(format!(
            "fit for order {order} needs at least 8 samples over 2 refinement levels, \
             got {} samples over {} levels",
            samples.len(),
            levels.len()
        )));
    }

    let mut params = config.init;
    let mut m = [T::zero(); 4];
    let mut v = [T::zero(); 4];
    let mut history = Vec::with_capacity(config.epochs);
    let mut best = (T::infinity(), params);
    let mut initial_loss = T::zero();

    for epoch in 0..config.epochs {
        let (loss, grad) = loss_and_gradient(&params, &samples);
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        if epoch == 0 {
            initial_loss = loss;
        }
        if loss < best.0 {
            best = (loss, params);
        }
        history.push(loss);

        let t = epoch as i32 + 1;
        let bc1 = T::one() - config.beta1.powi(t);
        let bc2 = T::one() - config.beta2.powi(t);
        for i in 0..4 {
            m[i] = config.beta1 * m[i] + (T::one() - config.beta1) * grad[i];
            v[i] = config.beta2 * v[i] + (T::one() - config.beta2) * grad[i] * grad[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
        }
    }
    let (final_loss, _) = loss_and_gradient(&params, &samples);
    if final_loss.is_finite() && final_loss < best.0 {
        best = (final_loss, params);
    }

    let [kc0, kc1, a0, a1] = best.1;
    Ok(FitOutcome {
        coefficients: ShiftMapCoefficients { order, kc0, kc1, a0, a1 },
        initial_loss,
        loss: best.0,
        history,
    })
}

/// Where a comparison value comes from: the Fourier analysis or a sampled
/// run on a domain of the given size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonSource {
    Analysis,
    Sampled { domain_size: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonEntry<T: Real> {
    pub k: T,
    pub source: ComparisonSource,
    pub sigma: Option<T>,
}

/// Side-by-side critical exponents and sampled near-optimal exponents at a
/// fixed mesh size h = 2^{−ℓ} on growing squares (0, s)². Emits, per
/// wavenumber, one analysis entry followed by one sampled entry per domain
/// size, so the table has |k|·(1 + |S|) rows.
pub fn lfa_comparison<T: Real>(
    level_for_unit: u32,
    domain_sizes: &[u32],
    k_values: &[T],
    seed: u64,
    budget: &SolveBudget<T>,
    domain: ThetaDomain,
) -> Result<Vec<ComparisonEntry<T>>> {
    let h = T::of(0.5).powi(level_for_unit as i32);
    let mut entries = Vec::new();
    for (ki, &k) in k_values.iter().enumerate() {
        let cfg = LfaConfig::new(k, h, T::of(2.0) / T::of(3.0), 3, 3)?;
        let sigma_c = critical_exponent(&cfg, domain)?;
        entries.push(ComparisonEntry { k, source: ComparisonSource::Analysis, sigma: sigma_c });
        for (si, &s) in domain_sizes.iter().enumerate() {
            if !s.is_power_of_two() {
                return Err(Error::config(format!(
                    "domain size {s} is not a power of two"
                )));
            }
            let level = level_for_unit + s.trailing_zeros();
            let sample = sample_on_domain(
                1,
                level,
                T::of(s as f64),
                k,
                seed.wrapping_add((ki * 1024 + si) as u64),
                budget,
            )?;
            entries.push(ComparisonEntry {
                k,
                source: ComparisonSource::Sampled { domain_size: s },
                sigma: Some(sample.record.sigma_hat),
            });
        }
    }
    Ok(entries)
}
