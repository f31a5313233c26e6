//! The twogrid shifted-Laplacian preconditioner: one V(ν,ν) cycle on
//! A(k, ε) with damped Jacobi smoothing, canonical Q_p nodal transfers, and
//! a direct coarse solve.
//!
//! The coarse matrix is assembled by rediscretizing the shifted form on the
//! coarse space (not by Galerkin projection) and LU-factored once, on the
//! first application — i.e. inside the first outer Krylov iteration — then
//! reused.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fem::basis::lagrange_value;
use crate::fem::{ShiftSpec, SystemOperator};
use crate::grid::GridLevel;
use crate::scalar::{magnitude, Cx, Real};
use crate::sparse::Factorized;
use crate::wavenumber::WavenumberField;

/// Smoothing/damping parameters of the V-cycle. The level count is fixed to
/// two by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig<T: Real> {
    /// Pre- and postsmoothing steps ν (the cycle is V(ν,ν)).
    pub nu: usize,
    /// Jacobi damping factor ω.
    pub omega: T,
}

impl<T: Real> Default for CycleConfig<T> {
    fn default() -> Self {
        CycleConfig {
            nu: 3,
            omega: T::of(2.0 / 3.0),
        }
    }
}

impl<T: Real> CycleConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(Error::config("smoothing step count must be at least 1"));
        }
        if !(self.omega > T::zero() && self.omega <= T::one()) {
            return Err(Error::config(format!(
                "Jacobi damping must lie in (0, 1], got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// 1D interpolation weights from a coarse level to the nested fine level:
/// fine node i takes its value from the p+1 nodes of coarse cell `cell[i]`
/// with weights `w[i]`.
#[derive(Debug, Clone)]
pub struct Transfer<T: Real> {
    order: usize,
    fine_nodes: usize,
    coarse_nodes: usize,
    cell: Vec<usize>,
    w: Vec<[T; 4]>,
}

impl<T: Real> Transfer<T> {
    pub fn new(coarse: &GridLevel<T>, fine: &GridLevel<T>) -> Result<Self> {
        if fine.level_index != coarse.level_index + 1
            || fine.order != coarse.order
            || fine.domain_size != coarse.domain_size
        {
            return Err(Error::config(format!(
                "transfer needs nested levels with equal order: coarse (l={}, p={}), fine (l={}, p={})",
                coarse.level_index, coarse.order, fine.level_index, fine.order
            )));
        }
        let p = fine.order;
        let nf = fine.nodes_per_side();
        let cc = coarse.cells_per_side;
        let mut cell = Vec::with_capacity(nf);
        let mut w = Vec::with_capacity(nf);
        for ix in 0..nf {
            let c = (ix / (2 * p)).min(cc - 1);
            let xi = T::of((ix - c * 2 * p) as f64) / T::of((2 * p) as f64);
            let mut wi = [T::zero(); 4];
            for (j, slot) in wi.iter_mut().enumerate().take(p + 1) {
                *slot = lagrange_value(p, j, xi);
            }
            cell.push(c);
            w.push(wi);
        }
        Ok(Transfer {
            order: p,
            fine_nodes: nf,
            coarse_nodes: coarse.nodes_per_side(),
            cell,
            w,
        })
    }

    /// u_fine += I u_coarse (canonical nodal interpolation).
    pub fn prolongate_add(&self, u_coarse: &[Cx<T>], u_fine: &mut [Cx<T>]) {
        let p = self.order;
        let nf = self.fine_nodes;
        let nc = self.coarse_nodes;
        debug_assert_eq!(u_fine.len(), nf * nf);
        debug_assert_eq!(u_coarse.len(), nc * nc);
        for iy in 0..nf {
            let cy = self.cell[iy] * p;
            let wy = &self.w[iy];
            for ix in 0..nf {
                let cx_ = self.cell[ix] * p;
                let wx = &self.w[ix];
                let mut s = Cx::<T>::zero();
                for jy in 0..=p {
                    let row = (cy + jy) * nc + cx_;
                    let wyj = wy[jy];
                    for jx in 0..=p {
                        s += u_coarse[row + jx] * (wyj * wx[jx]);
                    }
                }
                u_fine[iy * nf + ix] += s;
            }
        }
    }

    /// r_coarse = Iᵀ r_fine (non-conjugated transpose of the interpolation).
    pub fn restrict(&self, r_fine: &[Cx<T>], r_coarse: &mut [Cx<T>]) {
        let p = self.order;
        let nf = self.fine_nodes;
        let nc = self.coarse_nodes;
        debug_assert_eq!(r_fine.len(), nf * nf);
        debug_assert_eq!(r_coarse.len(), nc * nc);
        r_coarse.fill(Cx::zero());
        for iy in 0..nf {
            let cy = self.cell[iy] * p;
            let wy = &self.w[iy];
            for ix in 0..nf {
                let cx_ = self.cell[ix] * p;
                let wx = &self.w[ix];
                let v = r_fine[iy * nf + ix];
                if v.is_zero() {
                    continue;
                }
                for jy in 0..=p {
                    let row = (cy + jy) * nc + cx_;
                    let wyj = wy[jy];
                    for jx in 0..=p {
                        r_coarse[row + jx] += v * (wyj * wx[jx]);
                    }
                }
            }
        }
    }
}

/// u_fine += I u_coarse between nested levels.
pub fn prolongate_add<T: Real>(
    u_fine: &mut [Cx<T>],
    u_coarse: &[Cx<T>],
    fine: &GridLevel<T>,
    coarse: &GridLevel<T>,
) -> Result<()> {
    Transfer::new(coarse, fine)?.prolongate_add(u_coarse, u_fine);
    Ok(())
}

/// r_coarse = Iᵀ r_fine between nested levels.
pub fn restrict_residual<T: Real>(
    r_fine: &[Cx<T>],
    fine: &GridLevel<T>,
    coarse: &GridLevel<T>,
) -> Result<Vec<Cx<T>>> {
    let t = Transfer::new(coarse, fine)?;
    let nc = coarse.dof_count();
    let mut out = vec![Cx::zero(); nc];
    t.restrict(r_fine, &mut out);
    Ok(out)
}

fn invert_diagonal<T: Real>(diag: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    diag.iter()
        .enumerate()
        .map(|(index, &d)| {
            if magnitude(d).is_zero() {
                Err(Error::SingularSmoother { index })
            } else {
                Ok(Cx::new(T::one(), T::zero()) / d)
            }
        })
        .collect()
}

fn smooth_steps<T: Real>(
    op: &SystemOperator<T>,
    inv_diag: &[Cx<T>],
    u: &mut [Cx<T>],
    rhs: &[Cx<T>],
    nu: usize,
    omega: T,
    work: &mut [Cx<T>],
) -> Result<()> {
    for _ in 0..nu {
        op.apply(u, work)?;
        for i in 0..u.len() {
            u[i] += inv_diag[i] * (rhs[i] - work[i]) * omega;
        }
    }
    Ok(())
}

/// ν damped-Jacobi steps u ← u + ω D⁻¹ (rhs − A u) on the operator's level.
pub fn jacobi_smooth<T: Real>(
    op: &SystemOperator<T>,
    u: &mut [Cx<T>],
    rhs: &[Cx<T>],
    nu: usize,
    omega: T,
) -> Result<()> {
    let inv_diag = invert_diagonal(op.diagonal())?;
    let mut work = vec![Cx::zero(); u.len()];
    smooth_steps(op, &inv_diag, u, rhs, nu, omega, &mut work)
}

/// One-V-cycle preconditioner for the shifted system A(k, ε).
///
/// Owns the shifted operators on both levels plus all work vectors; the
/// coarse LU is computed lazily on the first application and reused.
#[derive(Debug)]
pub struct TwoGridPreconditioner<T: Real> {
    fine: SystemOperator<T>,
    coarse: SystemOperator<T>,
    config: CycleConfig<T>,
    transfer: Transfer<T>,
    inv_diag: Vec<Cx<T>>,
    factorization: Option<Factorized<T>>,
    factorization_count: usize,
    shift_label: String,
    k_max: f64,
    work_fine: Vec<Cx<T>>,
    resid_fine: Vec<Cx<T>>,
    resid_coarse: Vec<Cx<T>>,
}

impl<T: Real> TwoGridPreconditioner<T> {
    pub fn new(
        coarse: &GridLevel<T>,
        fine: &GridLevel<T>,
        k: &WavenumberField<T>,
        shift: &ShiftSpec<T>,
        config: CycleConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        let transfer = Transfer::new(coarse, fine)?;
        let fine_op = SystemOperator::new(fine, k, shift);
        let coarse_op = SystemOperator::new(coarse, k, shift);
        let inv_diag = invert_diagonal(fine_op.diagonal())?;
        let nf = fine.dof_count();
        let nc = coarse.dof_count();
        Ok(TwoGridPreconditioner {
            fine: fine_op,
            coarse: coarse_op,
            config,
            transfer,
            inv_diag,
            factorization: None,
            factorization_count: 0,
            shift_label: format!("{shift:?}"),
            k_max: k.k_max.as_f64(),
            work_fine: vec![Cx::zero(); nf],
            resid_fine: vec![Cx::zero(); nf],
            resid_coarse: vec![Cx::zero(); nc],
        })
    }

    pub fn fine_operator(&self) -> &SystemOperator<T> {
        &self.fine
    }

    pub fn coarse_operator(&self) -> &SystemOperator<T> {
        &self.coarse
    }

    /// How many times the coarse matrix has been factored (the reuse
    /// contract requires this to stay at 1 across a whole Krylov solve).
    pub fn factorization_count(&self) -> usize {
        self.factorization_count
    }

    /// Preconditioner action z = P⁻¹ rhs: one V(ν,ν) cycle from a zero
    /// initial guess.
    pub fn apply(&mut self, rhs: &[Cx<T>], z: &mut [Cx<T>]) -> Result<()> {
        z.fill(Cx::zero());
        self.v_cycle(z, rhs)
    }

    /// One V(ν,ν) cycle updating u toward the solution of A(k, ε) u = rhs.
    pub fn v_cycle(&mut self, u: &mut [Cx<T>], rhs: &[Cx<T>]) -> Result<()> {
        let n = self.fine.dof_count();
        if u.len() != n || rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if u.len() != n { u.len() } else { rhs.len() },
            });
        }
        let CycleConfig { nu, omega } = self.config;

        // Presmoothing.
        smooth_steps(
            &self.fine,
            &self.inv_diag,
            u,
            rhs,
            nu,
            omega,
            &mut self.work_fine,
        )?;

        // Restrict the residual.
        self.fine.apply(u, &mut self.resid_fine)?;
        for (r, f) in self.resid_fine.iter_mut().zip(rhs) {
            *r = f - *r;
        }
        self.transfer.restrict(&self.resid_fine, &mut self.resid_coarse);

        // Direct coarse solve (factor once).
        self.ensure_factorization()?;
        self.factorization
            .as_ref()
            .expect("factorization just ensured")
            .solve(&mut self.resid_coarse);

        // Correct and postsmooth. For damped Jacobi the postsmoother equals
        // the presmoother: its iteration matrix is its own non-conjugated
        // transpose because D is diagonal and A is complex-symmetric.
        self.transfer.prolongate_add(&self.resid_coarse, u);
        smooth_steps(
            &self.fine,
            &self.inv_diag,
            u,
            rhs,
            nu,
            omega,
            &mut self.work_fine,
        )
    }

    fn ensure_factorization(&mut self) -> Result<()> {
        if self.factorization.is_some() {
            return Ok(());
        }
        let matrix = self.coarse.assemble();
        let p = self.coarse.level().order;
        let band = p * self.coarse.level().nodes_per_side() + p;
        let fact = Factorized::factor(&matrix, band).map_err(|e| Error::CoarseFactorization {
            k: self.k_max,
            shift: self.shift_label.clone(),
            h: self.coarse.level().mesh_size.as_f64(),
            detail: e.to_string(),
        })?;
        self.factorization = Some(fact);
        self.factorization_count += 1;
        Ok(())
    }

    /// Solve the assembled coarse system directly (factoring on first use).
    pub fn coarse_solve(&mut self, rhs_coarse: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        let nc = self.coarse.dof_count();
        if rhs_coarse.len() != nc {
            return Err(Error::DimensionMismatch {
                expected: nc,
                got: rhs_coarse.len(),
            });
        }
        self.ensure_factorization()?;
        let mut x = rhs_coarse.to_vec();
        self.factorization
            .as_ref()
            .expect("factorization just ensured")
            .solve(&mut x);
        Ok(x)
    }
}
