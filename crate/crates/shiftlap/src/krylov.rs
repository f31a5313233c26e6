//! Flexible GMRES, right-preconditioned, without restarts.
//!
//! The flexible variant stores one preconditioned basis vector per iteration,
//! so the preconditioner may change between iterations (here: its first
//! application factors the coarse grid). Convergence is tracked with the
//! Givens-rotation residual estimate and confirmed by an explicit true
//! residual before the solver reports success; the final history entry is
//! always that recomputed true residual.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::{axpy, dot, norm};
use crate::scalar::{cx, magnitude, Cx, Real};

/// Outcome of one FGMRES solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport<T: Real> {
    /// Number of Krylov iterations performed (basis vectors consumed).
    pub iterations: usize,
    /// ‖A u^{(j)} − F‖₂ per iteration, starting with the initial residual;
    /// intermediate entries are Arnoldi/Givens estimates of the true
    /// residual, the final entry is recomputed explicitly.
    pub residual_history: Vec<T>,
    pub converged: bool,
    /// Average convergence rate (r_end / r_0)^(1/end); zero for a trivial
    /// solve that needed no iterations.
    pub rho: T,
    /// Seconds spent in the solve, preconditioner applications included.
    pub wall_time: f64,
}

/// Average residual reduction rate (r_end / r_0)^(1/end).
pub fn average_rate<T: Real>(report: &KrylovReport<T>) -> Result<T> {
    if report.iterations == 0 {
        return Err(Error::UndefinedRate);
    }
    let r0 = report.residual_history[0];
    let r_end = *report
        .residual_history
        .last()
        .expect("history is never empty");
    Ok((r_end / r0).powf(T::one() / T::of(report.iterations as f64)))
}

/// Solve A x = rhs with right-preconditioned flexible GMRES from a zero
/// initial guess. `apply_a(x, y)` writes y = A x; `apply_p_inv(r, z)` writes
/// z ≈ A⁻¹ r and may mutate captured state (lazy factorizations).
pub fn fgmres<T, A, P>(
    apply_a: A,
    apply_p_inv: P,
    rhs: &[Cx<T>],
    tol: T,
    max_iter: usize,
) -> Result<(Vec<Cx<T>>, KrylovReport<T>)>
where
    T: Real,
    A: Fn(&[Cx<T>], &mut [Cx<T>]) -> Result<()>,
    P: FnMut(&[Cx<T>], &mut [Cx<T>]) -> Result<()>,
{
    let (x, report, _) = fgmres_with_basis(apply_a, apply_p_inv, rhs, tol, max_iter)?;
    Ok((x, report))
}

fn fgmres_with_basis<T, A, P>(
    apply_a: A,
    mut apply_p_inv: P,
    rhs: &[Cx<T>],
    tol: T,
    max_iter: usize,
) -> Result<(Vec<Cx<T>>, KrylovReport<T>, Vec<Vec<Cx<T>>>)>
where
    T: Real,
    A: Fn(&[Cx<T>], &mut [Cx<T>]) -> Result<()>,
    P: FnMut(&[Cx<T>], &mut [Cx<T>]) -> Result<()>,
{
    if !(tol > T::zero()) {
        return Err(Error::config(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::config("max_iter must be at least 1"));
    }
    let start = Instant::now();
    let n = rhs.len();
    let beta = norm(rhs);
    if !beta.is_finite() {
        return Err(Error::Divergence { iteration: 0 });
    }
    if beta.is_zero() {
        let report = KrylovReport {
            iterations: 0,
            residual_history: vec![T::zero()],
            converged: true,
            rho: T::zero(),
            wall_time: start.elapsed().as_secs_f64(),
        };
        return Ok((vec![Cx::default(); n], report, Vec::new()));
    }

    // Orthonormal basis V, preconditioned vectors Z, Hessenberg columns
    // (Givens-rotated into the triangular factor in place), rotations, and
    // the rotated least-squares right-hand side g.
    let mut basis: Vec<Vec<Cx<T>>> = Vec::with_capacity(16);
    let mut precon: Vec<Vec<Cx<T>>> = Vec::with_capacity(16);
    let mut rcols: Vec<Vec<Cx<T>>> = Vec::with_capacity(16);
    let mut rot: Vec<(T, Cx<T>)> = Vec::with_capacity(16);
    let mut g: Vec<Cx<T>> = vec![cx(beta, T::zero())];
    let mut history = vec![beta];

    basis.push(rhs.iter().map(|&v| v / beta).collect());

    let mut w = vec![Cx::<T>::default(); n];
    let inv_sqrt2 = T::of(std::f64::consts::FRAC_1_SQRT_2);
    let tol_abs = tol * beta;

    let solution_of = |rcols: &[Vec<Cx<T>>],
                       g: &[Cx<T>],
                       precon: &[Vec<Cx<T>>],
                       upto: usize|
     -> Vec<Cx<T>> {
        // Back-substitute R y = g over columns 0..upto, then x = Z y. A
        // (numerically) zero diagonal entry marks a rank-deficient column —
        // its component is a free variable and is set to zero; the explicit
        // true-residual check downstream judges the result.
        let rmax = (0..upto).fold(T::zero(), |m, j| m.max(magnitude(rcols[j][j])));
        let tiny = rmax * T::epsilon() * T::of(32.0);
        let mut y = vec![Cx::<T>::default(); upto];
        for j in (0..upto).rev() {
            let mut s = g[j];
            for m in (j + 1)..upto {
                s -= rcols[m][j] * y[m];
            }
            let d = rcols[j][j];
            if magnitude(d) > tiny {
                y[j] = s / d;
            }
        }
        let mut x = vec![Cx::<T>::default(); n];
        for (yj, zj) in y.iter().zip(precon) {
            axpy(*yj, zj, &mut x);
        }
        x
    };

    let mut converged = false;
    let mut final_x: Option<Vec<Cx<T>>> = None;
    let mut iterations = 0usize;

    for j in 0..max_iter {
        // z_j = P⁻¹ v_j, w = A z_j
        let mut z = vec![Cx::<T>::default(); n];
        apply_p_inv(&basis[j], &mut z)?;
        apply_a(&z, &mut w)?;
        precon.push(z);

        let norm_pre = norm(&w);
        if !norm_pre.is_finite() {
            return Err(Error::Divergence { iteration: j + 1 });
        }

        // Modified Gram-Schmidt with one conditional reorthogonalization.
        let mut hcol = vec![Cx::<T>::default(); j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(v, &w);
            axpy(-hij, v, &mut w);
            hcol[i] = hij;
        }
        let mut hlast = norm(&w);
        if hlast < norm_pre * inv_sqrt2 {
            for (i, v) in basis.iter().enumerate() {
                let dh = dot(v, &w);
                axpy(-dh, v, &mut w);
                hcol[i] += dh;
            }
            hlast = norm(&w);
        }
        if !hlast.is_finite() || hcol.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::Divergence { iteration: j + 1 });
        }
        // Happy breakdown: what survives two orthogonalization passes at the
        // level of roundoff in ‖A z‖ is noise, not a new direction.
        let exhausted = hlast <= norm_pre * (T::epsilon() * T::of(32.0));
        if exhausted {
            hlast = T::zero();
        }
        hcol[j + 1] = cx(hlast, T::zero());

        // Apply the accumulated rotations, then a new one zeroing hcol[j+1].
        for (i, &(c, s)) in rot.iter().enumerate() {
            let a = hcol[i];
            let b = hcol[i + 1];
            hcol[i] = a * c + s * b;
            hcol[i + 1] = -s.conj() * a + b * c;
        }
        let (c, s) = givens(hcol[j], hlast);
        let a = hcol[j];
        hcol[j] = a * c + s * hlast;
        hcol[j + 1] = Cx::default();
        rot.push((c, s));
        let gj = g[j];
        g[j] = gj * c;
        g.push(-s.conj() * gj);
        rcols.push(hcol);

        let estimate = magnitude(g[j + 1]);
        history.push(estimate);
        iterations = j + 1;

        let last_round = j + 1 == max_iter;
        if estimate <= tol_abs || exhausted || last_round {
            let x = solution_of(&rcols, &g, &precon, j + 1);
            apply_a(&x, &mut w)?;
            for (wi, fi) in w.iter_mut().zip(rhs) {
                *wi = fi - *wi;
            }
            let true_res = norm(&w);
            if true_res <= tol_abs {
                *history.last_mut().expect("nonempty") = true_res;
                converged = true;
                final_x = Some(x);
                break;
            }
            if exhausted {
                // Happy breakdown but the subspace cannot represent the
                // solution to tolerance: the operator is effectively rank
                // deficient for this right-hand side.
                return Err(Error::NumericalBreakdown {
                    iteration: j + 1,
                    residual: (true_res / beta).as_f64(),
                });
            }
            if last_round {
                *history.last_mut().expect("nonempty") = true_res;
                final_x = Some(x);
                break;
            }
            // Estimate passed but the true residual did not: keep iterating.
        }

        let vnext: Vec<Cx<T>> = w.iter().map(|&v| v / hlast).collect();
        basis.push(vnext);
    }

    let x = match final_x {
        Some(x) => x,
        // Defensive: the loop always breaks with a solution or errors out.
        None => solution_of(&rcols, &g, &precon, iterations),
    };
    let r0 = history[0];
    let r_end = *history.last().expect("nonempty");
    let rho = (r_end / r0).powf(T::one() / T::of(iterations as f64));
    let report = KrylovReport {
        iterations,
        residual_history: history,
        converged,
        rho,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((x, report, basis))
}

/// Complex Givens rotation zeroing the second component: for a ∈ ℂ and real
/// b ≥ 0, returns (c, s) with c real, c² + |s|² = 1 and −s̄·a + c·b = 0.
fn givens<T: Real>(a: Cx<T>, b: T) -> (T, Cx<T>) {
    let am = magnitude(a);
    if am.is_zero() {
        return (T::zero(), cx(T::one(), T::zero()));
    }
    let t = am.hypot(b);
    let c = am / t;
    let s = a * (b / (t * am));
    (c, s)
}
